use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const TSNE_MAX_POINTS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMethod {
    Pca,
    Tsne,
}

impl FromStr for ProjectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(Self::Pca),
            "tsne" => Ok(Self::Tsne),
            other => Err(Error::invalid(format!("unknown projection method {other:?} (pca|tsne)"))),
        }
    }
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pca => "pca",
            Self::Tsne => "tsne",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub coords: Array2<f64>,
    /// Covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

fn check_points(data: ArrayView2<f64>) -> Result<()> {
    if data.nrows() < 3 {
        return Err(Error::invalid(format!("projection needs at least 3 vectors, got {}", data.nrows())));
    }
    if data.ncols() == 0 || data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("projection input must be non-empty and finite"));
    }
    Ok(())
}

/// Projects onto the top-2 covariance eigenvectors. Each eigenvector is
/// signed so its largest-magnitude component is positive.
pub fn pca(data: ArrayView2<f64>) -> Result<PcaResult> {
    check_points(data)?;
    let (n, d) = data.dim();
    if data.rows().into_iter().all(|r| r == data.row(0)) {
        return Ok(PcaResult {
            coords: Array2::zeros((n, 2)),
            eigenvalues: vec![0.0; d],
        });
    }
    let mean = data.mean_axis(Axis(0)).expect("n >= 3");
    let centered = &data - &mean;
    let cov = centered.t().dot(&centered) / (n - 1) as f64;
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |r, c| cov[[r, c]]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut basis = Array2::<f64>::zeros((d, 2));
    for (axis, &k) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(k);
        let lead = (0..d).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            basis[[i, axis]] = sign * v[i];
        }
    }
    Ok(PcaResult {
        coords: centered.dot(&basis),
        eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum_switch_iter: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 500,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 100,
            momentum_switch_iter: 250,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Array2<f64>,
    /// `kl[t]` is KL(P || Q) after update `t`, measured against the unexaggerated P.
    pub kl: Vec<f64>,
}

fn pairwise_sq(data: ArrayView2<f64>) -> Array2<f64> {
    let n = data.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = data.row(i).iter().zip(data.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Conditional row distribution whose entropy (nats) matches `ln(perplexity)` to 1e-5.
fn conditional_row(dist: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
    let mut row = vec![0.0; dist.len()];
    for _ in 0..200 {
        let min_d = dist
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .fold(f64::INFINITY, |m, (_, &v)| m.min(v));
        let mut sum = 0.0;
        for (j, p) in row.iter_mut().enumerate() {
            *p = if j == i { 0.0 } else { (-beta * (dist[j] - min_d)).exp() };
            sum += *p;
        }
        let mut weighted = 0.0;
        for (j, p) in row.iter_mut().enumerate() {
            *p /= sum;
            weighted += *p * (dist[j] - min_d);
        }
        let entropy = sum.ln() + beta * weighted;
        let gap = entropy - target;
        if gap.abs() < 1e-5 {
            break;
        }
        if gap > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    row
}

/// Exact O(N^2) symmetric t-SNE.
pub fn tsne(data: ArrayView2<f64>, cfg: &TsneConfig, seed: u64) -> Result<TsneResult> {
    check_points(data)?;
    let n = data.nrows();
    if n > TSNE_MAX_POINTS {
        return Err(Error::invalid(format!(
            "exact t-SNE is capped at {TSNE_MAX_POINTS} points, got {n}; subsample first"
        )));
    }
    if !(cfg.perplexity > 0.0 && cfg.perplexity < (n as f64 - 1.0) / 3.0) {
        return Err(Error::invalid(format!(
            "perplexity {} must be positive and below (N-1)/3 = {:.3}",
            cfg.perplexity,
            (n as f64 - 1.0) / 3.0
        )));
    }
    let dist = pairwise_sq(data);
    let mut p = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let row = conditional_row(dist.row(i).as_slice().expect("standard layout"), i, cfg.perplexity);
        p.row_mut(i).assign(&ndarray::Array1::from(row));
    }
    let p = {
        let sym = &p + &p.t();
        let total = sym.sum();
        sym.mapv(|v| (v / total).max(1e-12))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = Normal::new(0.0, 1e-4).expect("valid sd");
    let mut y = Array2::from_shape_fn((n, 2), |_| init.sample(&mut rng));
    let mut velocity = Array2::<f64>::zeros((n, 2));
    let mut gains = Array2::<f64>::ones((n, 2));
    let mut num = Array2::<f64>::zeros((n, n));
    let mut kl = Vec::with_capacity(cfg.iterations);

    let student = |y: &Array2<f64>, num: &mut Array2<f64>| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            num[[i, i]] = 0.0;
            for j in i + 1..n {
                let dx = y[[i, 0]] - y[[j, 0]];
                let dy = y[[i, 1]] - y[[j, 1]];
                let v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[[i, j]] = v;
                num[[j, i]] = v;
                total += 2.0 * v;
            }
        }
        total
    };
    let divergence = |num: &Array2<f64>, total: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let q = (num[[i, j]] / total).max(1e-12);
                    s += p[[i, j]] * (p[[i, j]] / q).ln();
                }
            }
        }
        s
    };

    for t in 0..cfg.iterations {
        let total = student(&y, &mut num);
        if t > 0 {
            kl.push(divergence(&num, total));
        }
        let exaggeration = if t < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let momentum = if t < cfg.momentum_switch_iter { 0.5 } else { 0.8 };
        for i in 0..n {
            let mut grad = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let coeff = 4.0 * (exaggeration * p[[i, j]] - num[[i, j]] / total) * num[[i, j]];
                grad[0] += coeff * (y[[i, 0]] - y[[j, 0]]);
                grad[1] += coeff * (y[[i, 1]] - y[[j, 1]]);
            }
            for (c, g) in grad.into_iter().enumerate() {
                let gain = &mut gains[[i, c]];
                // delta-bar-delta gains, as in the reference implementation
                *gain = if (g > 0.0) != (velocity[[i, c]] > 0.0) { *gain + 0.2 } else { *gain * 0.8 };
                *gain = gain.max(0.01);
                velocity[[i, c]] = momentum * velocity[[i, c]] - cfg.learning_rate * *gain * g;
            }
        }
        y += &velocity;
        let mean = y.mean_axis(Axis(0)).expect("n >= 3");
        y -= &mean;
        log::trace!("tsne iteration {t}");
    }
    let total = student(&y, &mut num);
    kl.push(divergence(&num, total));
    if let Some(last) = kl.last() {
        log::debug!("tsne final KL {last:.6}");
    }
    Ok(TsneResult { coords: y, kl })
}

pub fn project_2d(data: ArrayView2<f64>, method: ProjectionMethod, tsne_cfg: &TsneConfig, seed: u64) -> Result<Array2<f64>> {
    match method {
        ProjectionMethod::Pca => pca(data).map(|r| r.coords),
        ProjectionMethod::Tsne => tsne(data, tsne_cfg, seed).map(|r| r.coords),
    }
}

pub fn projection_csv(utt_ids: &[String], coords: &Array2<f64>, labels: &[String]) -> Result<String> {
    if utt_ids.len() != coords.nrows() || labels.len() != coords.nrows() || coords.ncols() != 2 {
        return Err(Error::invalid("projection CSV needs one id and label per 2D point"));
    }
    let mut out = String::from("utt_id,x,y,label\n");
    for ((id, row), label) in utt_ids.iter().zip(coords.rows()).zip(labels) {
        out.push_str(&format!("{id},{},{},{label}\n", row[0], row[1]));
    }
    Ok(out)
}

pub fn write_projection_csv(path: &Path, utt_ids: &[String], coords: &Array2<f64>, labels: &[String]) -> Result<()> {
    let text = projection_csv(utt_ids, coords, labels)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Cyclic Jacobi rotations; independent of the library eigensolver.
    fn jacobi_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
        let n = a.nrows();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[[i, j]].powi(2)).sum();
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[[p, q]].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[[k, p]], a[[k, q]]);
                        a[[k, p]] = c * akp - s * akq;
                        a[[k, q]] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                        a[[p, k]] = c * apk - s * aqk;
                        a[[q, k]] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    fn gaussian(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |(_, c)| rng.sample::<f64, _>(StandardNormal) * (d - c) as f64)
    }

    #[test]
    fn eigenvalues_match_jacobi_oracle() {
        let x = gaussian(40, 5, 1);
        let res = pca(x.view()).unwrap();
        // second-moment matrix built directly from sums
        let n = x.nrows() as f64;
        let mut m = Array2::<f64>::zeros((5, 5));
        for r in 0..5 {
            for c in 0..5 {
                let sr: f64 = x.column(r).sum();
                let sc: f64 = x.column(c).sum();
                let src: f64 = x.column(r).iter().zip(x.column(c)).map(|(a, b)| a * b).sum();
                m[[r, c]] = (src - sr * sc / n) / (n - 1.0);
            }
        }
        let oracle = jacobi_eigenvalues(m);
        for (a, b) in res.eigenvalues.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn collinear_points_use_one_axis() {
        let x = Array2::from_shape_fn((10, 3), |(r, c)| r as f64 * [1.0, -2.0, 0.5][c] + 3.0);
        let res = pca(x.view()).unwrap();
        assert!(res.coords.column(1).iter().all(|v| v.abs() < 1e-9));
        assert!(res.coords.column(0).iter().any(|v| v.abs() > 1.0));
    }

    #[test]
    fn identical_vectors_project_to_origin() {
        let x = Array2::from_elem((6, 4), 0.7);
        let res = pca(x.view()).unwrap();
        assert!(res.coords.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rotation_preserves_pairwise_distances() {
        let x = gaussian(30, 3, 4);
        let (c, s) = (0.6f64, 0.8f64);
        let rot = ndarray::array![[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let a = pca(x.view()).unwrap();
        assert!(a.eigenvalues[1] - a.eigenvalues[2] > 1e-6);
        let b = pca(x.dot(&rot).view()).unwrap().coords;
        let a = a.coords;
        for i in 0..30 {
            for j in 0..30 {
                let da = (&a.row(i) - &a.row(j)).mapv(|v| v * v).sum();
                let db = (&b.row(i) - &b.row(j)).mapv(|v| v * v).sum();
                assert!((da - db).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sign_convention_is_stable() {
        let x = gaussian(20, 4, 9);
        let flipped = x.mapv(|v| -v);
        let a = pca(x.view()).unwrap().coords;
        let b = pca(flipped.view()).unwrap().coords;
        // negating the data negates the centered data but not the basis signs
        for (u, v) in a.iter().zip(b.iter()) {
            assert!((u + v).abs() < 1e-9);
        }
    }

    #[test]
    fn tsne_kl_decreases_after_exaggeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Array2::from_shape_fn((60, 4), |(r, c)| {
            let center = if (r / 20) == c { 6.0 } else { 0.0 };
            center + rng.sample::<f64, _>(StandardNormal)
        });
        let cfg = TsneConfig {
            perplexity: 10.0,
            ..TsneConfig::default()
        };
        let res = tsne(x.view(), &cfg, 3).unwrap();
        assert_eq!(res.kl.len(), cfg.iterations);
        let first_free = res.kl[cfg.exaggeration_iters];
        assert!(*res.kl.last().unwrap() <= first_free, "{} > {first_free}", res.kl.last().unwrap());
        assert!(res.coords.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn tsne_rejects_bad_perplexity_and_size() {
        let x = gaussian(10, 2, 0);
        assert!(tsne(x.view(), &TsneConfig::default(), 0).is_err());
        let tiny = ndarray::array![[0.0], [1.0]];
        assert!(pca(tiny.view()).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let coords = ndarray::array![[0.5, -1.0]];
        let csv = projection_csv(&["u1".into()], &coords, &["hum".into()]).unwrap();
        assert_eq!(csv, "utt_id,x,y,label\nu1,0.5,-1,hum\n");
    }
}
