use std::collections::HashMap;
use std::hash::Hash;

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn assign(rows: &[Vec<f64>], centroids: &Array2<f64>) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let assignments = rows
        .iter()
        .map(|r| {
            let (best, d) = centroids
                .rows()
                .into_iter()
                .enumerate()
                .map(|(c, centroid)| (c, sq_dist(r, centroid)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            inertia += d;
            best
        })
        .collect();
    (assignments, inertia)
}

fn plus_plus_init(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let dim = rows[0].len();
    let mut centroids = Array2::zeros((k, dim));
    let first = rng.gen_range(0..rows.len());
    centroids.row_mut(0).assign(&Array1::from(rows[first].clone()));
    let mut nearest: Vec<f64> = rows.iter().map(|r| sq_dist(r, centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = rows.len() - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..rows.len())
        };
        centroids.row_mut(c).assign(&Array1::from(rows[pick].clone()));
        for (n, r) in nearest.iter_mut().zip(rows) {
            *n = n.min(sq_dist(r, centroids.row(c)));
        }
    }
    centroids
}

fn lloyd(rows: &[Vec<f64>], mut centroids: Array2<f64>) -> KMeansFit {
    let k = centroids.nrows();
    let (mut assignments, mut inertia) = assign(rows, &centroids);
    let mut history = vec![inertia];
    for _ in 0..MAX_ITERATIONS {
        let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (r, &a) in rows.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums.row_mut(a).iter_mut().zip(r) {
                *s += v;
            }
        }
        for c in 0..k {
            // an empty cluster keeps its previous centroid
            if counts[c] > 0 {
                let mean = sums.row(c).mapv(|s| s / counts[c] as f64);
                centroids.row_mut(c).assign(&mean);
            }
        }
        let (next, next_inertia) = assign(rows, &centroids);
        assert!(
            next_inertia <= inertia * (1.0 + 1e-12) + 1e-12,
            "k-means inertia increased from {inertia} to {next_inertia}"
        );
        history.push(next_inertia);
        let change = (inertia - next_inertia).abs() / inertia.max(f64::MIN_POSITIVE);
        assignments = next;
        inertia = next_inertia;
        if change < TOLERANCE {
            break;
        }
    }
    KMeansFit {
        centroids,
        assignments,
        inertia,
        inertia_history: history,
    }
}

/// k-means (squared Euclidean, k-means++ seeding), best of `restarts` by inertia.
pub fn kmeans(data: ArrayView2<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    let n = data.nrows();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the {n} points")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("k-means input must be finite"));
    }
    let rows: Vec<Vec<f64>> = data.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts.max(1) {
        let fit = lloyd(&rows, plus_plus_init(&rows, k, &mut rng));
        if best.as_ref().map_or(true, |b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// `(1/N) * sum over clusters of the majority label count`.
pub fn purity<L: Eq + Hash>(assignments: &[usize], labels: &[L]) -> Result<f64> {
    if assignments.len() != labels.len() || labels.is_empty() {
        return Err(Error::invalid("purity needs equally many, non-zero assignments and labels"));
    }
    let mut table: HashMap<usize, HashMap<&L, usize>> = HashMap::new();
    for (a, l) in assignments.iter().zip(labels) {
        *table.entry(*a).or_default().entry(l).or_default() += 1;
    }
    let majority: usize = table.values().map(|counts| counts.values().max().copied().unwrap_or(0)).sum();
    Ok(majority as f64 / labels.len() as f64)
}

pub fn kmeans_purity<L: Eq + Hash>(
    data: ArrayView2<f64>,
    labels: &[L],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    if labels.len() != data.nrows() {
        return Err(Error::invalid("one label per vector required"));
    }
    let fit = kmeans(data, k, restarts, seed)?;
    purity(&fit.assignments, labels)
}
