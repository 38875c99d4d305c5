#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use scenaware::embedder::{backward, DenseLayer, EmbeddingModel, InputNorm};
use scenaware::sampling::IndexTriplet;

pub const FD_EPS: f64 = 1e-5;
pub const KINK_GAP: f64 = 1e-4;

/// Plain-loop forward pass to unit-norm embeddings, one per row.
pub fn embed_rows(model: &EmbeddingModel, batch: &Array2<f64>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut out = Vec::new();
    let mut hidden_pre = Vec::new();
    for r in 0..batch.nrows() {
        let mut h: Vec<f64> = (0..batch.ncols())
            .map(|c| (batch[[r, c]] - model.norm.mean[c]) / model.norm.std[c])
            .collect();
        let last = model.layers.len() - 1;
        for (l, layer) in model.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.fan_out()];
            for (j, zj) in z.iter_mut().enumerate() {
                *zj = layer.biases[j] + (0..layer.fan_in()).map(|i| h[i] * layer.weights[[i, j]]).sum::<f64>();
            }
            if l < last {
                hidden_pre.push(z.clone());
                h = z.into_iter().map(|v| v.max(0.0)).collect();
            } else {
                let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                h = z.into_iter().map(|v| v / n).collect();
            }
        }
        out.push(h);
    }
    (out, hidden_pre)
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Hinge arguments `d(a,p) - d(a,n) + delta` per triplet.
pub fn hinge_args(model: &EmbeddingModel, batch: &Array2<f64>, triplets: &[IndexTriplet], delta: f64) -> Vec<f64> {
    let (e, _) = embed_rows(model, batch);
    triplets
        .iter()
        .map(|t| sq(&e[t.anchor], &e[t.positive]) - sq(&e[t.anchor], &e[t.negative]) + delta)
        .collect()
}

pub fn summed_loss(model: &EmbeddingModel, batch: &Array2<f64>, triplets: &[IndexTriplet], delta: f64) -> f64 {
    hinge_args(model, batch, triplets, delta).into_iter().map(|v| v.max(0.0)).sum()
}

fn random_layer(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> DenseLayer {
    let scale = (1.0 / fan_in as f64).sqrt();
    DenseLayer {
        weights: Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-2.0..2.0) * scale),
        biases: Array1::from_shape_fn(fan_out, |_| rng.gen_range(-0.2..0.2)),
    }
}

/// A small random model, batch and triplet set with every hinge and ReLU
/// at least a safe distance from its kink.
pub struct Case {
    pub model: EmbeddingModel,
    pub batch: Array2<f64>,
    pub triplets: Vec<IndexTriplet>,
    pub delta: f64,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    loop {
        let bands = rng.gen_range(2..=5);
        let frames = rng.gen_range(2..=4);
        let depth = rng.gen_range(0..=2);
        let mut widths = vec![bands * frames];
        for _ in 0..depth {
            widths.push(rng.gen_range(3..=32));
        }
        widths.push(rng.gen_range(2..=8));
        let layers = widths.windows(2).map(|w| random_layer(rng, w[0], w[1])).collect();
        let model = EmbeddingModel::from_layers(layers, InputNorm::identity(bands, frames)).expect("shapes chain");
        let rows = rng.gen_range(4..=10);
        let batch = Array2::from_shape_fn((rows, bands * frames), |_| rng.gen_range(-1.0..1.0));
        let triplets: Vec<IndexTriplet> = (0..rng.gen_range(3..=12))
            .map(|_| {
                let a = rng.gen_range(0..rows);
                let mut p = rng.gen_range(0..rows - 1);
                if p >= a {
                    p += 1;
                }
                IndexTriplet {
                    anchor: a,
                    positive: p,
                    negative: rng.gen_range(0..rows),
                }
            })
            .collect();
        let delta = rng.gen_range(0.1..1.0);
        let args = hinge_args(&model, &batch, &triplets, delta);
        let (_, pre) = embed_rows(&model, &batch);
        let hinge_ok = args.iter().all(|v| v.abs() > KINK_GAP) && args.iter().any(|&v| v > 0.0);
        let relu_ok = pre.iter().flatten().all(|v| v.abs() > 1e-3);
        if hinge_ok && relu_ok {
            return Case {
                model,
                batch,
                triplets,
                delta,
            };
        }
    }
}

/// Relative errors of the analytic gradient at `coords` random parameters.
pub fn gradient_errors(case: &Case, coords: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (grads, _) = backward(&case.model, case.batch.view(), &case.triplets, case.delta).expect("valid case");
    let mut errors = Vec::with_capacity(coords);
    for _ in 0..coords {
        let l = rng.gen_range(0..case.model.layers.len());
        let layer = &case.model.layers[l];
        let n_w = layer.weights.len();
        let k = rng.gen_range(0..n_w + layer.biases.len());
        let mut plus = case.model.clone();
        let mut minus = case.model.clone();
        let analytic = if k < n_w {
            let idx = (k / layer.fan_out(), k % layer.fan_out());
            plus.layers[l].weights[idx] += FD_EPS;
            minus.layers[l].weights[idx] -= FD_EPS;
            grads.layers[l].weights[idx]
        } else {
            plus.layers[l].biases[k - n_w] += FD_EPS;
            minus.layers[l].biases[k - n_w] -= FD_EPS;
            grads.layers[l].biases[k - n_w]
        };
        let fd = (summed_loss(&plus, &case.batch, &case.triplets, case.delta)
            - summed_loss(&minus, &case.batch, &case.triplets, case.delta))
            / (2.0 * FD_EPS);
        errors.push((fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1e-6));
    }
    errors
}
