//! Tensor file I/O, format `AEHM v1`.
//!
//! Layout: bytes 0-3 magic `AEHM`; `u32` little-endian version (= 1);
//! `u32` grid count C; `u32` height H; `u32` width W; then `C * H * W`
//! 32-bit little-endian IEEE-754 values, row-major within a grid, grids
//! back to back. No padding, no checksum.
//!
//! Values are stored at 32-bit precision: writing truncates the in-memory
//! `f64` values to the nearest `f32`, so a write/read round trip is
//! bit-exact precisely for values that are `f32`-representable.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const MAGIC: [u8; 4] = *b"AEHM";
pub const VERSION: u32 = 1;

const HEADER_LEN: usize = 20;

/// Serializes grids into the `AEHM v1` byte layout.
///
/// All grids must share one shape and there must be at least one.
pub fn encode_tensor(grids: &[Grid]) -> Result<Vec<u8>> {
    let first = grids
        .first()
        .ok_or_else(|| Error::parameter("cannot encode an empty grid list"))?;
    for g in grids {
        if !g.same_shape(first) {
            return Err(Error::shape(format!(
                "all grids in one tensor must share a shape: {}x{} vs {}x{}",
                first.width(),
                first.height(),
                g.width(),
                g.height()
            )));
        }
    }
    let (w, h, c) = (first.width(), first.height(), grids.len());
    let mut bytes = Vec::with_capacity(HEADER_LEN + c * h * w * 4);
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(c as u32).to_le_bytes());
    bytes.extend_from_slice(&(h as u32).to_le_bytes());
    bytes.extend_from_slice(&(w as u32).to_le_bytes());
    for g in grids {
        for &v in g.values() {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(bytes)
}

/// Parses the `AEHM v1` byte layout back into grids.
pub fn decode_tensor(bytes: &[u8]) -> Result<Vec<Grid>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated(format!(
            "header needs {HEADER_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected {:02x?}",
            &bytes[0..4],
            MAGIC
        )));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let c = read_u32(bytes, 8) as usize;
    let h = read_u32(bytes, 12) as usize;
    let w = read_u32(bytes, 16) as usize;
    if c == 0 || h == 0 || w == 0 {
        return Err(Error::Format(format!(
            "degenerate tensor dimensions C={c} H={h} W={w}"
        )));
    }
    let expected = (c as u64) * (h as u64) * (w as u64) * 4;
    let payload = &bytes[HEADER_LEN..];
    if (payload.len() as u64) < expected {
        return Err(Error::Truncated(format!(
            "payload holds {} bytes, header declares {expected}",
            payload.len()
        )));
    }
    if (payload.len() as u64) > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after declared payload",
            payload.len() as u64 - expected
        )));
    }
    let mut grids = Vec::with_capacity(c);
    let mut offset = 0;
    for _ in 0..c {
        let mut values = Vec::with_capacity(w * h);
        for _ in 0..w * h {
            let raw: [u8; 4] = payload[offset..offset + 4].try_into().unwrap();
            values.push(f32::from_le_bytes(raw) as f64);
            offset += 4;
        }
        grids.push(Grid::from_values(w, h, values)?);
    }
    Ok(grids)
}

/// Writes grids to `path` in `AEHM v1` format.
pub fn write_tensor<P: AsRef<Path>>(path: P, grids: &[Grid]) -> Result<()> {
    let bytes = encode_tensor(grids)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads grids from an `AEHM v1` file.
pub fn read_tensor<P: AsRef<Path>>(path: P) -> Result<Vec<Grid>> {
    let bytes = std::fs::read(path)?;
    decode_tensor(&bytes)
}

#[inline]
fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}
