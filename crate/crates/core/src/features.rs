//! Utterance-level scenario vectors and the per-frame concatenated feature `[m; n]`.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};

use crate::dsp::{MfccMatrix, WindowSequence};
use crate::embedder::EmbeddingModel;
use crate::error::{Error, Result};

/// Time-averaged window embedding of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioVector {
    pub values: Array1<f64>,
    pub utt_id: String,
    pub num_windows_averaged: usize,
}

/// Per-frame rows `[mfcc ; aux ; scenario]`; the first `base_dims` columns are `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledFeature {
    pub frames: Array2<f64>,
    pub base_dims: usize,
    pub scenario_dims: usize,
}

/// One unit-norm embedding per window, in window order.
pub fn embed_utterance(model: &EmbeddingModel, windows: &WindowSequence) -> Result<Array2<f64>> {
    if windows.is_empty() {
        return Err(Error::invalid(format!("utterance {} has no context windows", windows.clip_id)));
    }
    model.embed(windows.windows.iter().map(|w| w.view()))
}

/// Elementwise mean of the embeddings, not re-normalized.
pub fn scenario_vector(utt_id: &str, embeddings: ArrayView2<f64>) -> Result<ScenarioVector> {
    let values = embeddings
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::invalid(format!("no embeddings to average for {utt_id}")))?;
    Ok(ScenarioVector {
        values,
        utt_id: utt_id.to_string(),
        num_windows_averaged: embeddings.nrows(),
    })
}

/// Broadcasts the per-utterance `aux` and scenario vectors onto every MFCC frame.
pub fn assemble_features(base: &MfccMatrix, aux: Option<&[f64]>, scenario: &ScenarioVector) -> Result<AssembledFeature> {
    let frames = base.frames.nrows();
    if frames == 0 || base.frames.ncols() == 0 {
        return Err(Error::invalid("base feature matrix is empty"));
    }
    let aux = aux.unwrap_or(&[]);
    let per_utt: Array1<f64> = aux.iter().chain(scenario.values.iter()).copied().collect();
    let broadcast = per_utt
        .broadcast((frames, per_utt.len()))
        .expect("row vector broadcasts over frames");
    let rows = concatenate(Axis(1), &[base.frames.view(), broadcast])
        .expect("row counts match");
    Ok(AssembledFeature {
        base_dims: base.frames.ncols() + aux.len(),
        scenario_dims: scenario.values.len(),
        frames: rows,
    })
}

impl AssembledFeature {
    pub fn scenario_columns(&self) -> ArrayView2<'_, f64> {
        self.frames.slice(s![.., self.base_dims..])
    }
}
