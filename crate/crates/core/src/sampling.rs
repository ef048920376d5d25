//! Luma frames and cubic-convolution sampling at 1/8-pel positions.

use thiserror::Error;

use crate::geometry::PixelCoord;
use crate::scalar::Real;

/// Keys kernel parameter.
pub const KEYS_A: f64 = -0.5;

/// Fractional denominator of the interpolated reference.
pub const SUBPEL_PRECISION: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame dimensions must be non-zero, got {width}x{height}")]
    EmptyFrame { width: usize, height: usize },
    #[error("bit depth {0} not supported (1..=16)")]
    BitDepth(u8),
    #[error("expected {expected} samples, got {actual}")]
    SampleCount { expected: usize, actual: usize },
    #[error("sample {value} at index {index} exceeds the {bit_depth}-bit range")]
    SampleRange {
        index: usize,
        value: u16,
        bit_depth: u8,
    },
    #[error("unsupported subpel precision {0}; must be a power of two up to 8")]
    Precision(u32),
}

/// Single-channel raster in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    bit_depth: u8,
    data: Vec<u16>,
}

impl Frame {
    pub fn new(
        width: usize,
        height: usize,
        bit_depth: u8,
        data: Vec<u16>,
    ) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::EmptyFrame { width, height });
        }
        if bit_depth == 0 || bit_depth > 16 {
            return Err(FrameError::BitDepth(bit_depth));
        }
        if data.len() != width * height {
            return Err(FrameError::SampleCount {
                expected: width * height,
                actual: data.len(),
            });
        }
        let max = max_for_depth(bit_depth);
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, &v)| v > max) {
            return Err(FrameError::SampleRange {
                index,
                value,
                bit_depth,
            });
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            data,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        bit_depth: u8,
        value: u16,
    ) -> Result<Self, FrameError> {
        Self::new(width, height, bit_depth, vec![value; width * height])
    }

    /// 8-bit frame from a per-pixel generator; values are clamped to `0..=255`.
    pub fn from_fn_u8(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u16,
    ) -> Result<Self, FrameError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).min(255));
            }
        }
        Self::new(width, height, 8, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn max_value(&self) -> u16 {
        max_for_depth(self.bit_depth)
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u16> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        debug_assert!(v <= self.max_value());
        self.data[y * self.width + x] = v;
    }

    /// Sample with border replication for out-of-frame integer positions.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> u16 {
        let cx = x.clamp(0, self.width as i64 - 1) as usize;
        let cy = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bit_depth == other.bit_depth
    }
}

fn max_for_depth(bit_depth: u8) -> u16 {
    ((1u32 << bit_depth) - 1) as u16
}

/// Cubic convolution kernel with `a = -0.5`.
pub fn cubic_kernel<T: Real>(s: T) -> T {
    let a = T::lit(KEYS_A);
    let t = s.abs();
    let one = T::one();
    let two = T::lit(2.0);
    if t <= one {
        (a + two) * t * t * t - (a + T::lit(3.0)) * t * t + one
    } else if t < two {
        a * t * t * t - T::lit(5.0) * a * t * t + T::lit(8.0) * a * t - T::lit(4.0) * a
    } else {
        T::zero()
    }
}

/// Rounds a coordinate to the nearest 1/8 pel, halves away from zero.
#[inline]
pub fn quantize_subpel(v: f64) -> f64 {
    (v * SUBPEL_PRECISION as f64).round() / SUBPEL_PRECISION as f64
}

/// Reference frame viewed as a continuous signal at 1/8-pel resolution.
///
/// Weights at 1/8 phases are dyadic rationals with denominator 1024, so every
/// interpolated value is an exact multiple of `2^-20` and the `f64`
/// arithmetic here is exact for bit depths up to 16.
#[derive(Debug, Clone)]
pub struct SubpelGrid<'a> {
    source: &'a Frame,
    precision: u32,
    weights: Vec<[f64; 4]>,
}

impl<'a> SubpelGrid<'a> {
    pub fn new(source: &'a Frame) -> Self {
        Self::with_precision(source, SUBPEL_PRECISION).expect("default precision is valid")
    }

    pub fn with_precision(source: &'a Frame, precision: u32) -> Result<Self, FrameError> {
        if !precision.is_power_of_two() || precision > SUBPEL_PRECISION {
            return Err(FrameError::Precision(precision));
        }
        let weights = (0..precision)
            .map(|k| {
                let s = k as f64 / precision as f64;
                [
                    cubic_kernel(s + 1.0),
                    cubic_kernel(s),
                    cubic_kernel(1.0 - s),
                    cubic_kernel(2.0 - s),
                ]
            })
            .collect();
        Ok(Self {
            source,
            precision,
            weights,
        })
    }

    pub fn source(&self) -> &Frame {
        self.source
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Splits a coordinate into its integer base and phase index after quantization.
    #[inline]
    fn split(&self, v: f64) -> (i64, usize) {
        let steps = (v * self.precision as f64).round();
        let p = self.precision as i64;
        let steps = steps as i64;
        (steps.div_euclid(p), steps.rem_euclid(p) as usize)
    }

    /// Value at `p` after quantization, unrounded, clamped to the sample range.
    pub fn sample_at(&self, p: PixelCoord<f64>) -> f64 {
        let (ix, fx) = self.split(p.x);
        let (iy, fy) = self.split(p.y);
        let frame = self.source;
        if fx == 0 && fy == 0 {
            return frame.get_clamped(ix, iy) as f64;
        }
        let wx = &self.weights[fx];
        let wy = &self.weights[fy];
        let mut acc = 0.0;
        for (j, wyj) in wy.iter().enumerate() {
            if *wyj == 0.0 {
                continue;
            }
            let yy = iy - 1 + j as i64;
            let mut row = 0.0;
            for (i, wxi) in wx.iter().enumerate() {
                row += wxi * frame.get_clamped(ix - 1 + i as i64, yy) as f64;
            }
            acc += wyj * row;
        }
        acc.clamp(0.0, frame.max_value() as f64)
    }
}

/// Rounds an interpolated value to the nearest representable sample.
#[inline]
pub fn round_sample(v: f64, max: u16) -> u16 {
    v.round().clamp(0.0, max as f64) as u16
}
