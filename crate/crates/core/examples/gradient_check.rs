//! Compares the analytic triplet-loss gradient with central differences on a
//! small random model.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scenaware::embedder::{backward, DenseLayer, EmbeddingModel, InputNorm};
use scenaware::sampling::{mine_semi_hard, IndexTriplet};

fn loss(model: &EmbeddingModel, batch: &Array2<f64>, triplets: &[IndexTriplet], delta: f64) -> f64 {
    let e = model.forward_batch(batch.view()).embeddings;
    let d = |i: usize, j: usize| (&e.row(i) - &e.row(j)).mapv(|v| v * v).sum();
    triplets
        .iter()
        .map(|t| (d(t.anchor, t.positive) - d(t.anchor, t.negative) + delta).max(0.0))
        .sum()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (bands, frames) = (4, 3);
    let mut layer = |i: usize, o: usize| DenseLayer {
        weights: Array2::from_shape_fn((i, o), |_| rng.gen_range(-0.6..0.6)),
        biases: Array1::from_shape_fn(o, |_| rng.gen_range(-0.1..0.1)),
    };
    let layers = vec![layer(bands * frames, 16), layer(16, 8), layer(8, 4)];
    let model = EmbeddingModel::from_layers(layers, InputNorm::identity(bands, frames))?;

    let batch = Array2::from_shape_fn((8, bands * frames), |_| rng.gen_range(-1.0..1.0));
    let clip_ids = [0, 0, 1, 1, 2, 2, 3, 3];
    let triplets = mine_semi_hard(model.forward_batch(batch.view()).embeddings.view(), &clip_ids)?;
    let delta = 0.5;
    let (grads, report) = backward(&model, batch.view(), &triplets, delta)?;
    println!("{} triplets, loss {:.5}, active {:.2}", triplets.len(), report.total_loss, report.active_fraction);

    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for (l, g) in grads.layers.iter().enumerate() {
        for ((i, j), &analytic) in g.weights.indexed_iter() {
            let mut plus = model.clone();
            let mut minus = model.clone();
            plus.layers[l].weights[[i, j]] += eps;
            minus.layers[l].weights[[i, j]] -= eps;
            let fd = (loss(&plus, &batch, &triplets, delta) - loss(&minus, &batch, &triplets, delta)) / (2.0 * eps);
            worst = worst.max((fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1e-6));
        }
    }
    println!("worst relative error over all weights: {worst:.2e}");
    Ok(())
}
