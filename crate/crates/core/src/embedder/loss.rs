use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::model::{DenseLayer, EmbeddingModel, ForwardCache};
use crate::error::{Error, Result};
use crate::sampling::IndexTriplet;

pub const DEFAULT_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total_loss: f64,
    /// Fraction of triplets with a strictly positive hinge.
    pub active_fraction: f64,
    pub per_triplet: Vec<f64>,
}

impl LossReport {
    pub fn mean_loss(&self) -> f64 {
        if self.per_triplet.is_empty() {
            0.0
        } else {
            self.total_loss / self.per_triplet.len() as f64
        }
    }
}

/// Gradients with the same shapes as the model layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    pub fn all_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|&v| v == 0.0))
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn hinge(a: ArrayView1<f64>, p: ArrayView1<f64>, n: ArrayView1<f64>, delta: f64) -> f64 {
    (sq_dist(a, p) - sq_dist(a, n) + delta).max(0.0)
}

fn check_margin(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("margin must be finite and non-negative, got {delta}")))
    }
}

/// `[|a - p|^2 - |a - n|^2 + delta]_+`.
pub fn triplet_loss(a: ArrayView1<f64>, p: ArrayView1<f64>, n: ArrayView1<f64>, delta: f64) -> Result<f64> {
    check_margin(delta)?;
    if a.len() != p.len() || a.len() != n.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("three {}-vectors", a.len()),
            actual: format!("{}, {}, {}", a.len(), p.len(), n.len()),
        });
    }
    Ok(hinge(a, p, n, delta))
}

/// Loss and its gradient with respect to the embeddings, summed over triplets.
pub(crate) fn embedding_gradient(
    embeddings: ArrayView2<f64>,
    triplets: &[IndexTriplet],
    delta: f64,
) -> (Array2<f64>, LossReport) {
    let mut grad = Array2::zeros(embeddings.raw_dim());
    let mut per_triplet = Vec::with_capacity(triplets.len());
    let mut active = 0usize;
    for t in triplets {
        let (a, p, n) = (embeddings.row(t.anchor), embeddings.row(t.positive), embeddings.row(t.negative));
        let loss = hinge(a, p, n, delta);
        per_triplet.push(loss);
        if loss > 0.0 {
            active += 1;
            let ga = (&n - &p) * 2.0;
            let gp = (&p - &a) * 2.0;
            let gn = (&a - &n) * 2.0;
            let mut row = grad.row_mut(t.anchor);
            row += &ga;
            let mut row = grad.row_mut(t.positive);
            row += &gp;
            let mut row = grad.row_mut(t.negative);
            row += &gn;
        }
    }
    let total_loss = per_triplet.iter().sum();
    let active_fraction = if triplets.is_empty() {
        0.0
    } else {
        active as f64 / triplets.len() as f64
    };
    (
        grad,
        LossReport {
            total_loss,
            active_fraction,
            per_triplet,
        },
    )
}

/// Exact gradient of the summed triplet loss over a batch of flattened raw windows.
///
/// Back-propagates through the L2 normalization (`de/dz = (I - e e^T) / |z|`), the
/// output layer and the ReLU hidden layers. Inactive triplets contribute nothing.
pub fn backward(
    model: &EmbeddingModel,
    batch: ArrayView2<f64>,
    triplets: &[IndexTriplet],
    delta: f64,
) -> Result<(Gradients, LossReport)> {
    check_margin(delta)?;
    if batch.ncols() != model.norm.features() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} features per row", model.norm.features()),
            actual: batch.ncols().to_string(),
        });
    }
    let rows = batch.nrows();
    if let Some(t) = triplets
        .iter()
        .find(|t| t.anchor >= rows || t.positive >= rows || t.negative >= rows)
    {
        return Err(Error::invalid(format!("triplet {t:?} out of range for a batch of {rows}")));
    }
    let cache = model.forward_batch(batch);
    Ok(backward_cached(model, &cache, triplets, delta))
}

/// Backward pass reusing a forward cache; indices and margin must already be valid.
pub(crate) fn backward_cached(
    model: &EmbeddingModel,
    cache: &ForwardCache,
    triplets: &[IndexTriplet],
    delta: f64,
) -> (Gradients, LossReport) {
    let (grad_e, report) = embedding_gradient(cache.embeddings.view(), triplets, delta);

    // through the normalization layer
    let mut grad_z = grad_e;
    for ((mut g, e), &norm) in grad_z
        .rows_mut()
        .into_iter()
        .zip(cache.embeddings.rows())
        .zip(cache.norms.iter())
    {
        if norm > 0.0 {
            let radial = e.dot(&g);
            g.scaled_add(-radial, &e);
            g /= norm;
        } else {
            g.fill(0.0);
        }
    }

    let mut layers: Vec<DenseLayer> = Vec::with_capacity(model.layers.len());
    let mut upstream = grad_z;
    for l in (0..model.layers.len()).rev() {
        let input = &cache.inputs[l];
        let weights = input.t().dot(&upstream);
        let biases = upstream.sum_axis(Axis(0));
        if l > 0 {
            let mut down = upstream.dot(&model.layers[l].weights.t());
            ndarray::Zip::from(&mut down)
                .and(&cache.pre[l - 1])
                .for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
            upstream = down;
        }
        layers.push(DenseLayer { weights, biases });
    }
    layers.reverse();
    (Gradients { layers }, report)
}
