//! Model checkpoint ("SCNE"), little-endian: magic, `u32` version (1), `u32` layer
//! count, then per layer `u32` rows, `u32` cols, `f64` weights row-major, `f64`
//! biases (cols), then `u32` bands, `u32` frames, `f64` means, `f64` stds.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{DenseLayer, EmbeddingModel, InputNorm};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SCNE";
pub const VERSION: u32 = 1;

pub fn encode(model: &EmbeddingModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.layers.len() as u32).to_le_bytes());
    let put = |out: &mut Vec<u8>, vals: &mut dyn Iterator<Item = &f64>| {
        for v in vals {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for layer in &model.layers {
        let (rows, cols) = layer.weights.dim();
        out.extend_from_slice(&(rows as u32).to_le_bytes());
        out.extend_from_slice(&(cols as u32).to_le_bytes());
        put(&mut out, &mut layer.weights.iter());
        put(&mut out, &mut layer.biases.iter());
    }
    out.extend_from_slice(&(model.norm.bands as u32).to_le_bytes());
    out.extend_from_slice(&(model.norm.frames as u32).to_le_bytes());
    put(&mut out, &mut model.norm.mean.iter());
    put(&mut out, &mut model.norm.std.iter());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.at < n {
            return Err(self.fail(format!("truncated at byte {}", self.at)));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| self.fail("size overflow"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<EmbeddingModel> {
    let mut r = Reader { bytes, at: 0, path };
    if r.take(4)? != MAGIC {
        return Err(r.fail("missing SCNE magic"));
    }
    let version = r.u32()?;
    if version as u32 != VERSION {
        return Err(r.fail(format!("unsupported version {version}")));
    }
    let count = r.u32()?;
    let mut layers = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let rows = r.u32()?;
        let cols = r.u32()?;
        let weights = Array2::from_shape_vec((rows, cols), r.f64s(rows * cols)?).expect("sized");
        let biases = Array1::from(r.f64s(cols)?);
        layers.push(DenseLayer { weights, biases });
    }
    let bands = r.u32()?;
    let frames = r.u32()?;
    let mean = Array1::from(r.f64s(bands * frames)?);
    let std = Array1::from(r.f64s(bands * frames)?);
    if r.at != bytes.len() {
        return Err(r.fail(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    let model = EmbeddingModel::from_layers(layers, InputNorm { bands, frames, mean, std })
        .map_err(|e| r.fail(e.to_string()))?;
    if !model.all_finite() {
        return Err(r.fail("non-finite parameters"));
    }
    Ok(model)
}

pub fn save_checkpoint(path: &Path, model: &EmbeddingModel) -> Result<()> {
    fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<EmbeddingModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
