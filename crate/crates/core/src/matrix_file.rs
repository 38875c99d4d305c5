//! Binary matrix dump ("SCNM").
//!
//! Layout, all little-endian: magic `SCNM`, `u32` version (1), `u32` rows,
//! `u32` cols, then `rows * cols` `f32` values in row-major order.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SCNM";
pub const VERSION: u32 = 1;

pub fn encode(matrix: &Array2<f64>) -> Vec<u8> {
    let (rows, cols) = matrix.dim();
    let mut out = Vec::with_capacity(16 + rows * cols * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in matrix.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Array2<f32>> {
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 16 {
        return Err(bad("truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("missing SCNM magic"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    if word(4) != VERSION {
        return Err(bad(&format!("unsupported version {}", word(4))));
    }
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    let body = &bytes[16..];
    if body.len() != rows * cols * 4 {
        return Err(bad(&format!(
            "expected {} data bytes for {rows}x{cols}, found {}",
            rows * cols * 4,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked above"))
}

pub fn write(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    fs::write(path, encode(matrix)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Array2<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
