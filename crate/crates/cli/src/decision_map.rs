//! Per-block viewport decisions drawn over a frame.

use fisheye_mc::motion::{Method, MotionField};
use fisheye_mc::{Frame, Viewport};
use image::{Rgb, RgbImage};

use crate::error::CliError;

pub const DEFAULT_ALPHA: f64 = 0.45;

/// front/back red, bottom/top blue, left/right green.
pub fn viewport_color(v: Viewport) -> [u8; 3] {
    match v {
        Viewport::FrontBack => [255, 0, 0],
        Viewport::BottomTop => [0, 0, 255],
        Viewport::LeftRight => [0, 255, 0],
    }
}

const BOUNDARY: [u8; 3] = [0, 0, 0];

fn blend(base: u8, over: u8, alpha: f64) -> u8 {
    ((1.0 - alpha) * base as f64 + alpha * over as f64).round() as u8
}

/// Blends each block's viewport colour over `base` with opacity `alpha` and
/// marks the first row and column of every block as a 1-px boundary, blended
/// with the same opacity.
pub fn render_decision_map(
    field: &MotionField,
    base: &Frame,
    alpha: f64,
) -> Result<RgbImage, CliError> {
    if field.config.method != Method::VaPtmc {
        return Err(CliError::Config(format!(
            "decision maps need a va_ptmc field, got {}",
            field.config.method
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CliError::Config(format!(
            "overlay alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if (field.width, field.height) != (base.width(), base.height()) {
        return Err(CliError::Internal(format!(
            "field {}x{} does not match frame {}x{}",
            field.width,
            field.height,
            base.width(),
            base.height()
        )));
    }
    let shift = base.bit_depth().saturating_sub(8);
    let mut img = RgbImage::from_fn(base.width() as u32, base.height() as u32, |x, y| {
        let v = (base.get(x as usize, y as usize) >> shift) as u8;
        Rgb([v, v, v])
    });
    for est in &field.blocks {
        let color = viewport_color(est.viewport);
        let b = est.block;
        for (x, y) in b.pixels() {
            let edge = x == b.x || y == b.y;
            let over = if edge { BOUNDARY } else { color };
            let px = img.get_pixel_mut(x as u32, y as u32);
            for c in 0..3 {
                px[c] = blend(px[c], over[c], alpha);
            }
        }
    }
    Ok(img)
}

/// Fraction of blocks per viewport, in `Viewport::ALL` order.
pub fn viewport_shares(field: &MotionField) -> [f64; 3] {
    let mut counts = [0usize; 3];
    for est in &field.blocks {
        counts[est.viewport.code() as usize] += 1;
    }
    let n = field.blocks.len().max(1) as f64;
    counts.map(|c| c as f64 / n)
}
