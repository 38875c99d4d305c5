//! The optimization loop: batch assembly, semi-hard mining, triplet-loss
//! gradients and Adam updates, with checkpoints and a loss-curve log.

pub mod adam;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use adam::{adam_step, AdamConfig, AdamState};

use crate::corpus::Manifest;
use crate::dsp::{DspConfig, WindowSequence};
use crate::embedder::loss::backward_cached;
use crate::embedder::{self, init_model, EmbeddingModel, InputNorm, ModelConfig, DEFAULT_MARGIN};
use crate::error::{Error, Result};
use crate::pipeline;
use crate::sampling::{assemble_batch, mine_semi_hard, mine_semi_hard_with, tau_windows, PairRelation, SamplerConfig, SamplingMode};

pub const FINAL_CHECKPOINT: &str = "model.scne";
pub const LOSS_CURVE: &str = "loss_curve.csv";
const NORM_SAMPLE: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub clips_per_batch: usize,
    pub windows_per_clip: usize,
    pub adam: AdamConfig,
    pub delta: f64,
    pub seed: u64,
    /// Write an intermediate checkpoint every this many steps (0 disables).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            clips_per_batch: 8,
            windows_per_clip: 4,
            adam: AdamConfig::default(),
            delta: DEFAULT_MARGIN,
            seed: 7,
            checkpoint_every: 500,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        if self.clips_per_batch < 2 {
            return Err(Error::invalid("a batch needs at least 2 clips"));
        }
        if self.windows_per_clip < 2 {
            return Err(Error::invalid("a batch needs at least 2 windows per clip to form positives"));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::invalid(format!("margin must be non-negative, got {}", self.delta)));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPoint {
    pub step: usize,
    pub total_loss: f64,
    pub active_fraction: f64,
    pub triplets: usize,
}

impl LossPoint {
    pub fn mean_loss(&self) -> f64 {
        if self.triplets == 0 {
            0.0
        } else {
            self.total_loss / self.triplets as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EmbeddingModel,
    pub curve: Vec<LossPoint>,
    pub checkpoints: Vec<PathBuf>,
}

pub fn loss_curve_csv(curve: &[LossPoint]) -> String {
    let mut out = String::from("step,total_loss,active_fraction\n");
    for p in curve {
        let _ = writeln!(out, "{},{},{}", p.step, p.total_loss, p.active_fraction);
    }
    out
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Per-feature input statistics from up to 512 uniformly drawn windows.
pub fn fit_input_norm(clips: &[WindowSequence], rng: &mut ChaCha8Rng) -> Result<InputNorm> {
    let refs: Vec<(usize, usize)> = clips
        .iter()
        .enumerate()
        .flat_map(|(c, clip)| (0..clip.len()).map(move |i| (c, i)))
        .collect();
    let (bands, frames) = clips
        .iter()
        .find_map(WindowSequence::window_shape)
        .ok_or_else(|| Error::invalid("no windows to fit normalization on"))?;
    let picks: Vec<usize> = if refs.len() <= NORM_SAMPLE {
        (0..refs.len()).collect()
    } else {
        let mut p = index::sample(rng, refs.len(), NORM_SAMPLE).into_vec();
        p.sort_unstable();
        p
    };
    let mut data = Vec::with_capacity(picks.len() * bands * frames);
    for &p in &picks {
        let (c, i) = refs[p];
        data.extend(clips[c].windows[i].iter().copied());
    }
    let samples = Array2::from_shape_vec((picks.len(), bands * frames), data).expect("sized");
    InputNorm::fit(bands, frames, samples.view())
}

/// The model before its first update: initialized weights plus input
/// statistics fitted on up to 512 windows drawn with `seed`.
pub fn initial_model(clips: &[WindowSequence], model_cfg: &ModelConfig, seed: u64) -> Result<EmbeddingModel> {
    let mut model = init_model(model_cfg)?;
    let mut norm_rng = ChaCha8Rng::seed_from_u64(seed);
    norm_rng.set_stream(2);
    model.norm = fit_input_norm(clips, &mut norm_rng)?;
    Ok(model)
}

/// Trains an embedding model on clips' context windows.
///
/// Each step draws `P x K` windows, embeds them, mines semi-hard triplets, and
/// applies one Adam update. Empty clips are ignored. When `out_dir` is given the
/// loss curve, periodic checkpoints and `model.scne` are written there.
pub fn train(
    clips: &[WindowSequence],
    sampler: &SamplerConfig,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let clips: Vec<WindowSequence> = clips.iter().filter(|c| !c.is_empty()).cloned().collect();
    if clips.is_empty() {
        return Err(Error::TooShort("every clip is shorter than one context window".into()));
    }
    if sampler.mode == SamplingMode::Clip && clips.len() < 2 {
        return Err(Error::invalid("clip mode needs at least 2 clips"));
    }
    if clips.len() < cfg.clips_per_batch {
        return Err(Error::invalid(format!(
            "{} usable clips, batch needs {}",
            clips.len(),
            cfg.clips_per_batch
        )));
    }
    if !(sampler.tau_s > 0.0) {
        return Err(Error::invalid("tau must be positive"));
    }
    let shape = clips[0].window_shape().expect("non-empty");
    if clips.iter().any(|c| c.window_shape() != Some(shape)) {
        return Err(Error::invalid("clips have differing window shapes"));
    }
    if shape != (model_cfg.bands, model_cfg.frames) {
        return Err(Error::ShapeMismatch {
            expected: format!("windows of {:?}", (model_cfg.bands, model_cfg.frames)),
            actual: format!("{shape:?}"),
        });
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tau_w = tau_windows(sampler.tau_s, clips[0].window_hop_s);

    let mut model = initial_model(&clips, model_cfg, cfg.seed)?;
    let mut batch_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    batch_rng.set_stream(1);
    let mut adam = AdamState::new(&model, cfg.adam)?;

    let mut curve = Vec::with_capacity(cfg.steps);
    let mut checkpoints = Vec::new();
    for step in 1..=cfg.steps {
        let batch = assemble_batch(&clips, cfg.clips_per_batch, cfg.windows_per_clip, &mut batch_rng)?;
        let raw = model.stack_windows(batch.items.iter().map(|r| clips[r.clip].windows[r.index].view()))?;
        let cache = model.forward_batch(raw.view());
        let triplets = match sampler.mode {
            SamplingMode::Clip => mine_semi_hard(cache.embeddings.view(), &batch.clip_ids())?,
            SamplingMode::Temporal => mine_semi_hard_with(cache.embeddings.view(), |a, b| {
                let (ra, rb) = (batch.items[a], batch.items[b]);
                if ra.clip == rb.clip && ra.index.abs_diff(rb.index) <= tau_w {
                    PairRelation::Positive
                } else {
                    PairRelation::Negative
                }
            })?,
        };
        let (grads, report) = backward_cached(&model, &cache, &triplets, cfg.delta);
        if !report.total_loss.is_finite() {
            return Err(abort(out_dir, step, &model, &format!("loss is {}", report.total_loss)));
        }
        adam.apply(&mut model, &grads)?;
        if !model.all_finite() {
            return Err(abort(out_dir, step, &model, "parameters became non-finite after the update"));
        }
        curve.push(LossPoint {
            step,
            total_loss: report.total_loss,
            active_fraction: report.active_fraction,
            triplets: triplets.len(),
        });
        if step % 100 == 0 || step == cfg.steps {
            log::info!(
                "step {step}/{}: mean loss {:.4}, active {:.3}",
                cfg.steps,
                report.mean_loss(),
                report.active_fraction
            );
        }
        if let Some(dir) = out_dir {
            if cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && step != cfg.steps {
                let path = dir.join(format!("ckpt_{step:06}.scne"));
                embedder::save_checkpoint(&path, &model)?;
                checkpoints.push(path);
            }
        }
    }
    if let Some(dir) = out_dir {
        let path = dir.join(FINAL_CHECKPOINT);
        embedder::save_checkpoint(&path, &model)?;
        checkpoints.push(path);
        write(&dir.join(LOSS_CURVE), loss_curve_csv(&curve))?;
    }
    Ok(TrainOutcome {
        model,
        curve,
        checkpoints,
    })
}

fn abort(out_dir: Option<&Path>, step: usize, model: &EmbeddingModel, detail: &str) -> Error {
    if let Some(dir) = out_dir {
        let mut dump = format!("step={step}\nreason={detail}\n");
        for (i, l) in model.layers.iter().enumerate() {
            let bad = l.weights.iter().chain(l.biases.iter()).filter(|v| !v.is_finite()).count();
            let norm = l.weights.iter().filter(|v| v.is_finite()).map(|v| v * v).sum::<f64>().sqrt();
            let _ = writeln!(dump, "layer{i}: shape={:?} non_finite={bad} finite_weight_norm={norm}", l.weights.dim());
        }
        let path = dir.join("diagnostic.txt");
        if let Err(e) = fs::write(&path, dump) {
            log::error!("could not write {}: {e}", path.display());
        }
    }
    Error::NonFinite {
        step,
        detail: detail.to_string(),
    }
}

/// Extracts windows for every manifest entry and trains on them.
pub fn train_from_manifest(
    manifest: &Manifest,
    dsp: &DspConfig,
    sampler: &SamplerConfig,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    if manifest.is_empty() {
        return Err(Error::invalid("manifest is empty"));
    }
    let utts = pipeline::extract_all(manifest, dsp)?;
    let clips: Vec<WindowSequence> = utts.into_iter().map(|u| u.windows).collect();
    train(&clips, sampler, model_cfg, cfg, out_dir)
}
