//! Part masks as single-channel 8-bit PNG: 0 is background, k is part k.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, ImageReader};
use ing_core::PartAnnotation;

use crate::error::{ProtocolError, Result};

pub fn read_mask(path: &Path, image_id: &str) -> Result<PartAnnotation> {
    let reader = ImageReader::open(path)
        .map_err(|e| ProtocolError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| ProtocolError::io(path, e))?;
    if reader.format() != Some(ImageFormat::Png) {
        return Err(ProtocolError::invalid(path, "mask is not a PNG file"));
    }
    let img = reader
        .decode()
        .map_err(|e| ProtocolError::invalid(path, format!("cannot decode mask: {e}")))?;
    let gray = match img {
        DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(ProtocolError::invalid(
                path,
                format!("mask must be single-channel 8-bit, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = gray.dimensions();
    PartAnnotation::from_mask(image_id, h as usize, w as usize, gray.into_raw())
        .map_err(|e| ProtocolError::core(path, e))
}

pub fn write_mask(path: &Path, height: usize, width: usize, labels: &[u8]) -> Result<()> {
    let img = GrayImage::from_raw(width as u32, height as u32, labels.to_vec())
        .ok_or_else(|| ProtocolError::invalid(path, "label count does not match mask shape"))?;
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| ProtocolError::invalid(path, format!("cannot write mask: {e}")))
}
