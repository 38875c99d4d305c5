use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Batch-row indices of an anchor, positive and negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexTriplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRelation {
    Positive,
    Negative,
    Ignore,
}

const NORM_TOLERANCE: f64 = 1e-6;

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Semi-hard mining over same-clip positives and different-clip negatives.
pub fn mine_semi_hard(embeddings: ArrayView2<f64>, clip_ids: &[usize]) -> Result<Vec<IndexTriplet>> {
    if clip_ids.len() != embeddings.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} clip ids", embeddings.nrows()),
            actual: clip_ids.len().to_string(),
        });
    }
    if clip_ids.iter().all(|&c| c == clip_ids[0]) {
        return Err(Error::invalid("mining needs at least 2 distinct clips in the batch"));
    }
    mine_semi_hard_with(embeddings, |a, b| {
        if clip_ids[a] == clip_ids[b] {
            PairRelation::Positive
        } else {
            PairRelation::Negative
        }
    })
}

/// For every ordered positive pair `(a, p)`, `a != p`, picks the negative with the
/// smallest squared distance strictly greater than `d(a, p)`; if there is none, the
/// farthest negative. Anchors with no negative are skipped. Ties go to the lower index.
pub fn mine_semi_hard_with<F>(embeddings: ArrayView2<f64>, relation: F) -> Result<Vec<IndexTriplet>>
where
    F: Fn(usize, usize) -> PairRelation,
{
    let n = embeddings.nrows();
    let rows: Vec<Vec<f64>> = embeddings.rows().into_iter().map(|r| r.to_vec()).collect();
    for (i, r) in rows.iter().enumerate() {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("embedding {i} has norm {norm}, expected 1")));
        }
    }
    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = squared_distance(&rows[a], &rows[b]);
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    let mut out = Vec::new();
    for a in 0..n {
        let negatives: Vec<usize> = (0..n)
            .filter(|&k| k != a && relation(a, k) == PairRelation::Negative)
            .collect();
        if negatives.is_empty() {
            continue;
        }
        for p in 0..n {
            if p == a || relation(a, p) != PairRelation::Positive {
                continue;
            }
            let d_ap = dist[a * n + p];
            let mut semi_hard: Option<usize> = None;
            let mut easiest = negatives[0];
            for &k in &negatives {
                let d = dist[a * n + k];
                if d > d_ap && semi_hard.map_or(true, |s| d < dist[a * n + s]) {
                    semi_hard = Some(k);
                }
                if d > dist[a * n + easiest] {
                    easiest = k;
                }
            }
            out.push(IndexTriplet {
                anchor: a,
                positive: p,
                negative: semi_hard.unwrap_or(easiest),
            });
        }
    }
    Ok(out)
}
