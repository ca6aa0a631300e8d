//! `INGF` raster files.
//!
//! Layout: the magic bytes `49 4E 47 46` ("INGF"), `u32` LE height, `u32`
//! LE width, then `height * width` LE IEEE-754 `f32` values in row-major
//! order. Nothing follows the payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{ProtocolError, Result};

pub const MAGIC: [u8; 4] = *b"INGF";
pub const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl Raster {
    pub fn new(height: usize, width: usize, values: Vec<f32>) -> Self {
        assert_eq!(values.len(), height * width, "raster payload does not match its shape");
        Raster { height, width, values }
    }
}

/// Serializes a raster; non-finite values are rejected.
pub fn encode_raster(raster: &Raster) -> std::result::Result<Vec<u8>, String> {
    let h = u32::try_from(raster.height).map_err(|_| "height exceeds u32".to_string())?;
    let w = u32::try_from(raster.width).map_err(|_| "width exceeds u32".to_string())?;
    if raster.values.len() != raster.height * raster.width {
        return Err(format!(
            "{} values for a {}x{} raster",
            raster.values.len(),
            raster.height,
            raster.width
        ));
    }
    if let Some(i) = raster.values.iter().position(|v| !v.is_finite()) {
        return Err(format!("non-finite value at index {i}"));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * raster.values.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&h.to_le_bytes());
    out.extend_from_slice(&w.to_le_bytes());
    for v in &raster.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses raster bytes; `path` is only used in diagnostics.
pub fn decode_raster(bytes: &[u8], path: &Path) -> Result<Raster> {
    let truncated = |offset: usize, needed: usize| ProtocolError::Truncated {
        path: path.to_owned(),
        offset: offset as u64,
        needed: needed as u64,
        available: bytes.len().saturating_sub(offset) as u64,
    };
    if bytes.len() < MAGIC.len() {
        return Err(if bytes == &MAGIC[..bytes.len()] {
            truncated(0, HEADER_LEN)
        } else {
            ProtocolError::BadMagic {
                path: path.to_owned(),
                offset: 0,
            }
        });
    }
    if let Some(i) = bytes[..4].iter().zip(&MAGIC).position(|(a, b)| a != b) {
        return Err(ProtocolError::BadMagic {
            path: path.to_owned(),
            offset: i as u64,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(4, HEADER_LEN - 4));
    }
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = height
        .checked_mul(width)
        .ok_or_else(|| ProtocolError::invalid(path, format!("raster {height}x{width} is too large")))?;
    let payload = &bytes[HEADER_LEN..];
    let needed = count
        .checked_mul(4)
        .ok_or_else(|| ProtocolError::invalid(path, format!("raster {height}x{width} is too large")))?;
    if payload.len() < needed {
        return Err(ProtocolError::Truncated {
            path: path.to_owned(),
            offset: HEADER_LEN as u64,
            needed: needed as u64,
            available: payload.len() as u64,
        });
    }
    if payload.len() > needed {
        return Err(ProtocolError::TrailingBytes {
            path: path.to_owned(),
            offset: (HEADER_LEN + needed) as u64,
            trailing: (payload.len() - needed) as u64,
        });
    }
    let mut values = Vec::with_capacity(count);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(ProtocolError::NonFinite {
                path: path.to_owned(),
                offset: (HEADER_LEN + 4 * i) as u64,
            });
        }
        values.push(v);
    }
    Ok(Raster { height, width, values })
}

pub fn write_raster(path: &Path, raster: &Raster) -> Result<()> {
    let bytes = encode_raster(raster).map_err(|m| ProtocolError::invalid(path, m))?;
    let mut f = fs::File::create(path).map_err(|e| ProtocolError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| ProtocolError::io(path, e))
}

pub fn read_raster(path: &Path) -> Result<Raster> {
    let bytes = fs::read(path).map_err(|e| ProtocolError::io(path, e))?;
    decode_raster(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.ingf")
    }

    #[test]
    fn one_by_one_zero() {
        let bytes = encode_raster(&Raster::new(1, 1, vec![0.0])).unwrap();
        assert_eq!(
            bytes,
            [0x49, 0x4E, 0x47, 0x46, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0]
        );
        assert_eq!(decode_raster(&bytes, p()).unwrap(), Raster::new(1, 1, vec![0.0]));
    }

    #[test]
    fn negative_cases() {
        let good = encode_raster(&Raster::new(2, 1, vec![1.5, -2.0])).unwrap();

        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_raster(&bad, p()), Err(ProtocolError::BadMagic { offset: 0, .. })));
        let mut bad = good.clone();
        bad[2] = b'X';
        assert!(matches!(decode_raster(&bad, p()), Err(ProtocolError::BadMagic { offset: 2, .. })));

        assert!(matches!(decode_raster(&good[..7], p()), Err(ProtocolError::Truncated { offset: 4, .. })));
        assert!(matches!(decode_raster(&good[..15], p()), Err(ProtocolError::Truncated { offset: 12, .. })));
        assert!(matches!(decode_raster(&good[..2], p()), Err(ProtocolError::Truncated { offset: 0, .. })));
        assert!(matches!(decode_raster(b"", p()), Err(ProtocolError::Truncated { .. })));

        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode_raster(&long, p()), Err(ProtocolError::TrailingBytes { offset: 20, .. })));

        let mut nan = good.clone();
        nan[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = decode_raster(&nan, p()).unwrap_err();
        assert!(matches!(err, ProtocolError::NonFinite { offset: 16, .. }));
        assert!(err.to_string().contains("mem.ingf"));

        assert!(encode_raster(&Raster::new(1, 1, vec![f32::INFINITY])).is_err());
    }
}
