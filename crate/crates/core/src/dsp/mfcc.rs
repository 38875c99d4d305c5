use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};

use super::mel::LogMelSpectrogram;
use crate::error::{Error, Result};

pub const DEFAULT_CEPS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    /// `num_frames x num_ceps`.
    pub frames: Array2<f64>,
    pub frame_hop_s: f64,
}

/// Orthonormal DCT-II basis, `n x n`, row k holds coefficient k's cosines.
pub fn dct_matrix(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(k, i)| {
        let scale = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        scale * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()
    })
}

/// Inverse of the orthonormal DCT-II (i.e. DCT-III), zero-padding missing coefficients.
pub fn inverse_dct(coeffs: ArrayView1<f64>, n: usize) -> Array1<f64> {
    let basis = dct_matrix(n);
    let mut padded = Array1::zeros(n);
    padded
        .slice_mut(ndarray::s![..coeffs.len().min(n)])
        .assign(&coeffs.slice(ndarray::s![..coeffs.len().min(n)]));
    basis.t().dot(&padded)
}

pub fn mfcc(logmel: &LogMelSpectrogram, num_ceps: usize) -> Result<MfccMatrix> {
    let bands = logmel.frames.ncols();
    if num_ceps == 0 || num_ceps > bands {
        return Err(Error::invalid(format!(
            "num_ceps {num_ceps} must be in 1..={bands}"
        )));
    }
    let basis = dct_matrix(bands);
    let kept = basis.slice(ndarray::s![..num_ceps, ..]);
    Ok(MfccMatrix {
        frames: logmel.frames.dot(&kept.t()),
        frame_hop_s: logmel.frame_hop_s,
    })
}
