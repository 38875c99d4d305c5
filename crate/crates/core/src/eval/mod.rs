//! Separability metrics for scenario embeddings, plus 2D projections.

mod auc;
mod kmeans;
mod probe;
mod projection;
mod report;

pub use auc::{roc_auc, same_diff_auc};
pub use kmeans::{kmeans, kmeans_purity, purity, KMeansFit, MAX_ITERATIONS, TOLERANCE};
pub use probe::{fit_softmax, linear_probe, probe_loss_and_grad, ProbeOutcome, SoftmaxParams};
pub use projection::{
    pca, project_2d, projection_csv, tsne, write_projection_csv, PcaResult, ProjectionMethod, TsneConfig,
    TsneResult, TSNE_MAX_POINTS,
};
pub use report::{EvalReport, PROJECTION_FILE, REPORT_FILE};

use std::path::Path;

use ndarray::{concatenate, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::Manifest;
use crate::dsp::DspConfig;
use crate::embedder::EmbeddingModel;
use crate::error::{Error, Result};
use crate::features::{embed_utterance, scenario_vector, ScenarioVector};
use crate::pipeline::{extract_all, UtteranceFeatures};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub dsp: DspConfig,
    pub auc_pairs: usize,
    /// Defaults to the number of distinct labels.
    pub kmeans_k: Option<usize>,
    pub kmeans_restarts: usize,
    pub probe_l2: f64,
    pub projection: ProjectionMethod,
    pub tsne: TsneConfig,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            dsp: DspConfig::default(),
            auc_pairs: 5000,
            kmeans_k: None,
            kmeans_restarts: 10,
            probe_l2: 1e-3,
            projection: ProjectionMethod::Pca,
            tsne: TsneConfig::default(),
            seed: 7,
        }
    }
}

/// Everything the metrics need from one utterance.
#[derive(Debug, Clone)]
pub struct EmbeddedUtterance {
    pub utt_id: String,
    pub label: String,
    pub mean_mfcc: Array1<f64>,
    pub window_embeddings: Array2<f64>,
    pub scenario: ScenarioVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub auc: f64,
    pub purity: f64,
    pub probe_accuracy_base: f64,
    pub probe_accuracy_augmented: f64,
}

pub fn embed_corpus(model: &EmbeddingModel, utterances: &[UtteranceFeatures]) -> Result<Vec<EmbeddedUtterance>> {
    utterances
        .par_iter()
        .map(|u| {
            let window_embeddings = embed_utterance(model, &u.windows)?;
            let scenario = scenario_vector(&u.entry.utt_id, window_embeddings.view())?;
            let mean_mfcc = u
                .mfcc
                .frames
                .mean_axis(Axis(0))
                .ok_or_else(|| Error::invalid(format!("{} has no MFCC frames", u.entry.utt_id)))?;
            Ok(EmbeddedUtterance {
                utt_id: u.entry.utt_id.clone(),
                label: u.entry.label.clone(),
                mean_mfcc,
                window_embeddings,
                scenario,
            })
        })
        .collect()
}

fn label_ids(utts: &[EmbeddedUtterance]) -> (Vec<String>, Vec<usize>) {
    let mut names: Vec<String> = Vec::new();
    let ids = utts
        .iter()
        .map(|u| match names.iter().position(|n| *n == u.label) {
            Some(i) => i,
            None => {
                names.push(u.label.clone());
                names.len() - 1
            }
        })
        .collect();
    (names, ids)
}

/// Stratified split: within each label, a seeded shuffle sends the first half
/// (rounded up) to train.
pub fn probe_split(labels: &[usize], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        let cut = members.len().div_ceil(2);
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Z-scores columns with statistics from the training rows only.
fn standardize(features: &Array2<f64>, train: &[usize]) -> Array2<f64> {
    let train_rows = features.select(Axis(0), train);
    let mean = train_rows.mean_axis(Axis(0)).expect("non-empty train split");
    let std = train_rows.std_axis(Axis(0), 0.0).mapv(|s| if s < 1e-8 { 1.0 } else { s });
    (features - &mean) / &std
}

fn probe_accuracy(features: &Array2<f64>, labels: &[usize], split: &(Vec<usize>, Vec<usize>), l2: f64) -> Result<f64> {
    let (train, test) = split;
    let z = standardize(features, train);
    let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
    let out = linear_probe(
        z.select(Axis(0), train).view(),
        &pick(train),
        z.select(Axis(0), test).view(),
        &pick(test),
        l2,
    )?;
    Ok(out.accuracy)
}

pub fn compute_metrics(utts: &[EmbeddedUtterance], cfg: &EvalConfig) -> Result<Metrics> {
    if utts.len() < 2 {
        return Err(Error::invalid("evaluation needs at least 2 utterances"));
    }
    let clips: Vec<Array2<f64>> = utts.iter().map(|u| u.window_embeddings.clone()).collect();
    let auc = same_diff_auc(&clips, cfg.auc_pairs, cfg.seed)?;

    let (names, labels) = label_ids(utts);
    let vectors = stack(utts.iter().map(|u| &u.scenario.values))?;
    let k = cfg.kmeans_k.unwrap_or(names.len());
    let purity = kmeans_purity(vectors.view(), &labels, k, cfg.kmeans_restarts, cfg.seed)?;

    let split = probe_split(&labels, cfg.seed);
    if split.1.is_empty() {
        return Err(Error::invalid("too few utterances per label for a probe test split"));
    }
    let base = stack(utts.iter().map(|u| &u.mean_mfcc))?;
    let augmented = concatenate(Axis(1), &[base.view(), vectors.view()]).expect("row counts match");
    Ok(Metrics {
        auc,
        purity,
        probe_accuracy_base: probe_accuracy(&base, &labels, &split, cfg.probe_l2)?,
        probe_accuracy_augmented: probe_accuracy(&augmented, &labels, &split, cfg.probe_l2)?,
    })
}

fn stack<'a>(rows: impl Iterator<Item = &'a Array1<f64>>) -> Result<Array2<f64>> {
    let views: Vec<_> = rows.map(|r| r.view().insert_axis(Axis(0))).collect();
    concatenate(Axis(0), &views).map_err(|e| Error::invalid(format!("inconsistent vector lengths: {e}")))
}

/// Scenario vectors stacked one row per utterance.
pub fn scenario_matrix(utts: &[EmbeddedUtterance]) -> Result<Array2<f64>> {
    stack(utts.iter().map(|u| &u.scenario.values))
}

/// Runs the full evaluation and writes `eval_report.json` and `projection.csv`
/// under `out_dir`.
pub fn evaluate(manifest: &Manifest, model: &EmbeddingModel, cfg: &EvalConfig, out_dir: &Path) -> Result<EvalReport> {
    if model.window_shape() != (cfg.dsp.bands, cfg.dsp.window_frames) {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?} windows from the checkpoint", model.window_shape()),
            actual: format!("{:?} from the front-end config", (cfg.dsp.bands, cfg.dsp.window_frames)),
        });
    }
    let features = extract_all(manifest, &cfg.dsp)?;
    let utts = embed_corpus(model, &features)?;
    let metrics = compute_metrics(&utts, cfg)?;
    let coords = project_2d(scenario_matrix(&utts)?.view(), cfg.projection, &cfg.tsne, cfg.seed)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let projection_path = out_dir.join(PROJECTION_FILE);
    let ids: Vec<String> = utts.iter().map(|u| u.utt_id.clone()).collect();
    let labels: Vec<String> = utts.iter().map(|u| u.label.clone()).collect();
    write_projection_csv(&projection_path, &ids, &coords, &labels)?;
    let report = EvalReport::new(metrics, projection_path);
    report.write(&out_dir.join(REPORT_FILE))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stratified_and_disjoint() {
        let labels: Vec<usize> = (0..23).map(|i| i % 3).collect();
        let (train, test) = probe_split(&labels, 7);
        assert_eq!(train.len() + test.len(), 23);
        assert!(train.iter().all(|i| !test.contains(i)));
        for c in 0..3 {
            let n = labels.iter().filter(|&&l| l == c).count();
            let t = train.iter().filter(|&&i| labels[i] == c).count();
            assert_eq!(t, n.div_ceil(2));
        }
        assert_eq!(probe_split(&labels, 7), (train, test));
    }

    #[test]
    fn standardize_uses_train_statistics() {
        let f = ndarray::array![[1.0, 5.0], [3.0, 5.0], [100.0, 9.0]];
        let z = standardize(&f, &[0, 1]);
        assert_eq!(z[[0, 0]], -1.0);
        assert_eq!(z[[1, 0]], 1.0);
        // constant column keeps unit scale
        assert_eq!(z[[2, 1]], 4.0);
    }
}
