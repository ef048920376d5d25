//! PSNR and SSIM restricted to the circular fisheye image area.

use thiserror::Error;

use crate::geometry::{FisheyeCamera, PixelCoord};
use crate::sampling::Frame;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("mask selects no pixels")]
    EmptyMask,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Pixels that belong to the fisheye image circle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircularMask {
    width: usize,
    height: usize,
    inside: Vec<bool>,
}

impl CircularMask {
    pub fn from_camera(cam: &FisheyeCamera<f64>) -> Self {
        let (width, height) = cam.image_size();
        let r_max = cam.image_circle_radius();
        let inside = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| cam.radius_of(PixelCoord::new(x as f64, y as f64)) <= r_max)
            .collect();
        Self {
            width,
            height,
            inside,
        }
    }

    /// Mask that includes every pixel.
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            inside: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let inside = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self {
            width,
            height,
            inside,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.inside[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }
}

fn check(a: &Frame, b: &Frame, mask: &CircularMask) -> Result<(), MetricsError> {
    if !a.same_shape(b) {
        return Err(MetricsError::Shape(format!(
            "{}x{}@{} vs {}x{}@{}",
            a.width(),
            a.height(),
            a.bit_depth(),
            b.width(),
            b.height(),
            b.bit_depth()
        )));
    }
    if (mask.width, mask.height) != (a.width(), a.height()) {
        return Err(MetricsError::Shape(format!(
            "mask {}x{} vs frame {}x{}",
            mask.width,
            mask.height,
            a.width(),
            a.height()
        )));
    }
    if mask.count() == 0 {
        return Err(MetricsError::EmptyMask);
    }
    Ok(())
}

/// Mean squared error over masked pixels.
pub fn mse_masked(a: &Frame, b: &Frame, mask: &CircularMask) -> Result<f64, MetricsError> {
    check(a, b, mask)?;
    let (sum, n) = a
        .data()
        .iter()
        .zip(b.data())
        .zip(&mask.inside)
        .filter(|(_, &m)| m)
        .fold((0u64, 0u64), |(s, n), ((&x, &y), _)| {
            let d = x.abs_diff(y) as u64;
            (s + d * d, n + 1)
        });
    Ok(sum as f64 / n as f64)
}

/// PSNR in dB over masked pixels. Identical frames report `f64::INFINITY`.
pub fn psnr_masked(a: &Frame, b: &Frame, mask: &CircularMask) -> Result<f64, MetricsError> {
    let mse = mse_masked(a, b, mask)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let max = a.max_value() as f64;
    Ok(10.0 * (max * max / mse).log10())
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, wi) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *wi = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable Gaussian blur with border replication.
fn blur(src: &[f64], width: usize, height: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as i64;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * row[clamp(x as i64 + k as i64 - half, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[clamp(y as i64 + k as i64 - half, height) * width + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM over windows centered on masked pixels (11x11 Gaussian, σ = 1.5).
pub fn ssim_masked(a: &Frame, b: &Frame, mask: &CircularMask) -> Result<f64, MetricsError> {
    check(a, b, mask)?;
    if a == b {
        return Ok(1.0);
    }
    let (w, h) = (a.width(), a.height());
    let max = a.max_value() as f64;
    let c1 = (SSIM_K1 * max).powi(2);
    let c2 = (SSIM_K2 * max).powi(2);
    let kernel = gaussian_window();

    let fa: Vec<f64> = a.data().iter().map(|&v| v as f64).collect();
    let fb: Vec<f64> = b.data().iter().map(|&v| v as f64).collect();
    let aa: Vec<f64> = fa.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = fb.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();

    let mu_a = blur(&fa, w, h, &kernel);
    let mu_b = blur(&fb, w, h, &kernel);
    let s_aa = blur(&aa, w, h, &kernel);
    let s_bb = blur(&bb, w, h, &kernel);
    let s_ab = blur(&ab, w, h, &kernel);

    let mut sum = 0.0;
    let mut n = 0usize;
    for i in (0..w * h).filter(|&i| mask.inside[i]) {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = s_aa[i] - ma * ma;
        let vb = s_bb[i] - mb * mb;
        let cov = s_ab[i] - ma * mb;
        sum +=
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        n += 1;
    }
    Ok(sum / n as f64)
}
