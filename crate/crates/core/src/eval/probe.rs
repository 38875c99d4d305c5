use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const PROBE_ITERATIONS: usize = 500;
pub const PROBE_LEARNING_RATE: f64 = 0.1;

/// Multinomial logistic regression parameters: `weights` is `dim x classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub accuracy: f64,
    pub evaluated: usize,
    /// Test rows whose class never appears in the training labels.
    pub excluded: usize,
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Mean cross-entropy plus `(l2 / 2) * |W|^2` (bias unpenalized), with its gradient.
pub fn probe_loss_and_grad(
    params: &SoftmaxParams,
    x: ArrayView2<f64>,
    y: &[usize],
    l2_weight: f64,
) -> (f64, SoftmaxParams) {
    let n = x.nrows() as f64;
    let mut probs = x.dot(&params.weights) + &params.bias;
    softmax_rows(&mut probs);
    let mut loss = 0.0;
    for (i, &c) in y.iter().enumerate() {
        loss -= probs[[i, c]].max(f64::MIN_POSITIVE).ln();
        probs[[i, c]] -= 1.0;
    }
    loss = loss / n + 0.5 * l2_weight * params.weights.iter().map(|w| w * w).sum::<f64>();
    let weights = x.t().dot(&probs) / n + &params.weights * l2_weight;
    let bias = probs.sum_axis(Axis(0)) / n;
    (loss, SoftmaxParams { weights, bias })
}

/// Full-batch gradient descent from zero, 500 iterations at lr 0.1.
pub fn fit_softmax(x: ArrayView2<f64>, y: &[usize], classes: usize, l2_weight: f64) -> SoftmaxParams {
    let mut params = SoftmaxParams {
        weights: Array2::zeros((x.ncols(), classes)),
        bias: Array1::zeros(classes),
    };
    for _ in 0..PROBE_ITERATIONS {
        let (_, grad) = probe_loss_and_grad(&params, x, y, l2_weight);
        params.weights.scaled_add(-PROBE_LEARNING_RATE, &grad.weights);
        params.bias.scaled_add(-PROBE_LEARNING_RATE, &grad.bias);
    }
    params
}

/// Trains on `(train_x, train_y)` and reports accuracy on the test rows whose
/// class was seen in training. Ties in the argmax go to the lower class.
pub fn linear_probe(
    train_x: ArrayView2<f64>,
    train_y: &[usize],
    test_x: ArrayView2<f64>,
    test_y: &[usize],
    l2_weight: f64,
) -> Result<ProbeOutcome> {
    if train_x.nrows() != train_y.len() || test_x.nrows() != test_y.len() {
        return Err(Error::invalid("probe needs one label per feature row"));
    }
    if train_x.ncols() != test_x.ncols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} test columns", train_x.ncols()),
            actual: format!("{}", test_x.ncols()),
        });
    }
    if !(l2_weight >= 0.0) {
        return Err(Error::invalid("l2 weight must be non-negative"));
    }
    if train_x.iter().chain(test_x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("probe features must be finite"));
    }
    let class_index: BTreeMap<usize, usize> = {
        let mut seen: Vec<usize> = train_y.to_vec();
        seen.sort_unstable();
        seen.dedup();
        seen.into_iter().enumerate().map(|(i, c)| (c, i)).collect()
    };
    if class_index.len() < 2 {
        return Err(Error::invalid("probe needs at least 2 classes in the training labels"));
    }
    let y: Vec<usize> = train_y.iter().map(|c| class_index[c]).collect();
    let params = fit_softmax(train_x, &y, class_index.len(), l2_weight);
    let logits = test_x.dot(&params.weights) + &params.bias;
    let (mut correct, mut evaluated, mut excluded) = (0usize, 0usize, 0usize);
    for (row, label) in logits.rows().into_iter().zip(test_y) {
        let Some(&target) = class_index.get(label) else {
            excluded += 1;
            continue;
        };
        evaluated += 1;
        let predicted = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0;
        if predicted == target {
            correct += 1;
        }
    }
    if excluded > 0 {
        log::warn!("linear probe: {excluded} test rows have a class unseen in training and were excluded");
    }
    if evaluated == 0 {
        return Err(Error::invalid("no test row has a class seen in training"));
    }
    Ok(ProbeOutcome {
        accuracy: correct as f64 / evaluated as f64,
        evaluated,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn blobs(n_per: usize, classes: usize, spread: f64, rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<usize>) {
        let mut x = Array2::zeros((n_per * classes, 3));
        let mut y = Vec::new();
        for c in 0..classes {
            for i in 0..n_per {
                let r = c * n_per + i;
                x[[r, 0]] = 3.0 * (c as f64).cos() * (c + 1) as f64;
                x[[r, 1]] = 3.0 * (c as f64).sin() * (c + 1) as f64;
                for d in 0..3 {
                    x[[r, d]] += spread * rng.sample::<f64, _>(StandardNormal);
                }
                y.push(c);
            }
        }
        (x, y)
    }

    #[test]
    fn separable_two_class_data_is_perfect() {
        let x = ndarray::array![[-2.0, 0.0], [-1.0, 0.5], [1.0, -0.5], [2.0, 0.0]];
        let y = [0, 0, 1, 1];
        let out = linear_probe(x.view(), &y, x.view(), &y, 0.0).unwrap();
        assert_eq!(out.accuracy, 1.0);
        assert_eq!(out.excluded, 0);
    }

    #[test]
    fn shuffled_labels_sit_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, _) = blobs(200, 5, 0.3, &mut rng);
        let train_y: Vec<usize> = (0..x.nrows()).map(|_| rng.gen_range(0..5)).collect();
        let test_y: Vec<usize> = (0..x.nrows()).map(|_| rng.gen_range(0..5)).collect();
        let acc = linear_probe(x.view(), &train_y, x.view(), &test_y, 1e-3).unwrap().accuracy;
        // 1000 test rows: chance 0.2, sd about 0.013
        assert!((acc - 0.2).abs() < 0.06, "{acc}");
    }

    #[test]
    fn unseen_test_class_is_excluded_and_counted() {
        let x = ndarray::array![[-1.0], [1.0]];
        let test_x = ndarray::array![[-1.0], [1.0], [5.0]];
        let out = linear_probe(x.view(), &[0, 1], test_x.view(), &[0, 1, 9], 0.0).unwrap();
        assert_eq!(out.excluded, 1);
        assert_eq!(out.evaluated, 2);
        assert_eq!(out.accuracy, 1.0);
    }

    #[test]
    fn needs_two_classes_and_matching_dims() {
        let x = ndarray::array![[0.0], [1.0]];
        assert!(linear_probe(x.view(), &[3, 3], x.view(), &[3, 3], 0.0).is_err());
        let wide = ndarray::array![[0.0, 1.0]];
        assert!(linear_probe(x.view(), &[0, 1], wide.view(), &[0], 0.0).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (x, y) = blobs(6, 4, 1.0, &mut rng);
        let params = SoftmaxParams {
            weights: Array2::from_shape_fn((3, 4), |_| rng.gen_range(-0.5..0.5)),
            bias: Array1::from_shape_fn(4, |_| rng.gen_range(-0.5..0.5)),
        };
        let l2 = 0.03;
        let (_, grad) = probe_loss_and_grad(&params, x.view(), &y, l2);
        let eps = 1e-5;
        let rel = |fd: f64, an: f64| (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
        for idx in 0..12 {
            let (r, c) = (idx / 4, idx % 4);
            let mut plus = params.clone();
            plus.weights[[r, c]] += eps;
            let mut minus = params.clone();
            minus.weights[[r, c]] -= eps;
            let fd = (probe_loss_and_grad(&plus, x.view(), &y, l2).0
                - probe_loss_and_grad(&minus, x.view(), &y, l2).0)
                / (2.0 * eps);
            assert!(rel(fd, grad.weights[[r, c]]) <= 1e-4, "w[{r},{c}]");
        }
        for c in 0..4 {
            let mut plus = params.clone();
            plus.bias[c] += eps;
            let mut minus = params.clone();
            minus.bias[c] -= eps;
            let fd = (probe_loss_and_grad(&plus, x.view(), &y, l2).0
                - probe_loss_and_grad(&minus, x.view(), &y, l2).0)
                / (2.0 * eps);
            assert!(rel(fd, grad.bias[c]) <= 1e-4, "b[{c}]");
        }
    }
}
