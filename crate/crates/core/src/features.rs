//! Raster features for dataset distances: bilinear downscaling to a fixed
//! grid, flattened row-major with interleaved channels.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default feature grid side.
pub const DEFAULT_FEATURE_SIDE: usize = 32;

/// Bilinear resample of an interleaved `height x width x channels` raster
/// with pixel-center alignment (edges clamp).
pub fn resize_bilinear(
    src: &[f32],
    height: usize,
    width: usize,
    channels: usize,
    out_height: usize,
    out_width: usize,
) -> Result<Vec<f32>> {
    if height == 0 || width == 0 || channels == 0 || out_height == 0 || out_width == 0 {
        return Err(Error::InvalidCloud("raster dimensions must be positive".into()));
    }
    if src.len() != height * width * channels {
        return Err(Error::FeatureDimension {
            expected: height * width * channels,
            found: src.len(),
        });
    }
    let sample = |out: usize, inp: usize, i: usize| -> (usize, usize, f32) {
        let pos = ((i as f64 + 0.5) * inp as f64 / out as f64 - 0.5).max(0.0);
        let lo = (libm::floor(pos) as usize).min(inp - 1);
        let hi = (lo + 1).min(inp - 1);
        (lo, hi, (pos - lo as f64) as f32)
    };
    let mut out = Vec::with_capacity(out_height * out_width * channels);
    for oy in 0..out_height {
        let (y0, y1, fy) = sample(out_height, height, oy);
        for ox in 0..out_width {
            let (x0, x1, fx) = sample(out_width, width, ox);
            for c in 0..channels {
                let at = |y: usize, x: usize| src[(y * width + x) * channels + c];
                let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    Ok(out)
}

/// Downscaled raster as an `f64` feature vector.
pub fn raster_features(
    src: &[f32],
    height: usize,
    width: usize,
    channels: usize,
    side: usize,
) -> Result<Vec<f64>> {
    Ok(resize_bilinear(src, height, width, channels, side, side)?
        .into_iter()
        .map(f64::from)
        .collect())
}
