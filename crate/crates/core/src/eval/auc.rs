use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// ROC AUC by the Mann-Whitney rank statistic; tied scores count one half.
pub fn roc_auc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::invalid("AUC needs at least one positive and one negative score"));
    }
    if positive.iter().chain(negative).any(|s| s.is_nan()) {
        return Err(Error::invalid("AUC scores must not be NaN"));
    }
    let mut scored: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    // midranks over tie groups, 1-based
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < scored.len() {
        let mut j = i;
        while j + 1 < scored.len() && scored[j + 1].0 == scored[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * scored[i..=j].iter().filter(|s| s.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (positive.len() as f64, negative.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Same-clip versus different-clip discrimination over window embeddings.
///
/// `clips[c]` holds the embeddings of clip `c`, one per row. Draws `num_pairs`
/// same-clip pairs (two distinct windows) and `num_pairs` different-clip pairs,
/// scores each by negative squared distance and returns the AUC.
pub fn same_diff_auc(clips: &[Array2<f64>], num_pairs: usize, seed: u64) -> Result<f64> {
    if num_pairs == 0 {
        return Err(Error::invalid("num_pairs must be at least 1"));
    }
    let nonempty: Vec<usize> = (0..clips.len()).filter(|&c| clips[c].nrows() > 0).collect();
    if nonempty.len() < 2 {
        return Err(Error::invalid("same/different AUC needs at least 2 clips"));
    }
    let multi: Vec<usize> = nonempty.iter().copied().filter(|&c| clips[c].nrows() >= 2).collect();
    if multi.is_empty() {
        return Err(Error::invalid("no clip has two windows to form a same-clip pair"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut same = Vec::with_capacity(num_pairs);
    for _ in 0..num_pairs {
        let c = multi[rng.gen_range(0..multi.len())];
        let n = clips[c].nrows();
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        same.push(-sq_dist(clips[c].row(i), clips[c].row(j)));
    }
    let mut diff = Vec::with_capacity(num_pairs);
    for _ in 0..num_pairs {
        let a = rng.gen_range(0..nonempty.len());
        let mut b = rng.gen_range(0..nonempty.len() - 1);
        if b >= a {
            b += 1;
        }
        let (ca, cb) = (nonempty[a], nonempty[b]);
        let i = rng.gen_range(0..clips[ca].nrows());
        let j = rng.gen_range(0..clips[cb].nrows());
        diff.push(-sq_dist(clips[ca].row(i), clips[cb].row(j)));
    }
    roc_auc(&same, &diff)
}
