use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `fan_in x fan_out`.
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl DenseLayer {
    pub fn zeros_like(&self) -> Self {
        Self {
            weights: Array2::zeros(self.weights.raw_dim()),
            biases: Array1::zeros(self.biases.raw_dim()),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }
}

/// Per-feature z-scoring of the flattened `bands x frames` window.
#[derive(Debug, Clone, PartialEq)]
pub struct InputNorm {
    pub bands: usize,
    pub frames: usize,
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl InputNorm {
    pub fn identity(bands: usize, frames: usize) -> Self {
        Self {
            bands,
            frames,
            mean: Array1::zeros(bands * frames),
            std: Array1::ones(bands * frames),
        }
    }

    /// Fits mean and population std over rows of `samples`; near-constant features keep std 1.
    pub fn fit(bands: usize, frames: usize, samples: ArrayView2<f64>) -> Result<Self> {
        if samples.ncols() != bands * frames || samples.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                expected: format!("n x {}", bands * frames),
                actual: format!("{:?}", samples.dim()),
            });
        }
        let mean = samples.mean_axis(Axis(0)).expect("non-empty");
        let std = samples.std_axis(Axis(0), 0.0).mapv(|s| if s < 1e-8 { 1.0 } else { s });
        Ok(Self {
            bands,
            frames,
            mean,
            std,
        })
    }

    pub fn features(&self) -> usize {
        self.bands * self.frames
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub bands: usize,
    pub frames: usize,
    pub hidden: Vec<usize>,
    pub dim: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            bands: 40,
            frames: 96,
            hidden: vec![256, 128],
            dim: 64,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub layers: Vec<DenseLayer>,
    pub norm: InputNorm,
}

/// Intermediate values of a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Layer inputs: `inputs[0]` is the standardized batch, `inputs[l]` the ReLU output of layer `l - 1`.
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activations per layer; the last is the unnormalized output `z`.
    pub pre: Vec<Array2<f64>>,
    pub norms: Array1<f64>,
    /// Unit-norm embeddings, one row per batch item.
    pub embeddings: Array2<f64>,
}

/// Glorot-uniform weights, zero biases, identity input normalization.
pub fn init_model(cfg: &ModelConfig) -> Result<EmbeddingModel> {
    if cfg.dim < 2 {
        return Err(Error::invalid(format!("embedding dimension must be at least 2, got {}", cfg.dim)));
    }
    if cfg.hidden.is_empty() {
        return Err(Error::invalid("model needs at least one hidden layer"));
    }
    if cfg.bands == 0 || cfg.frames == 0 || cfg.hidden.contains(&0) {
        return Err(Error::invalid("layer sizes must be non-zero"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sizes = vec![cfg.bands * cfg.frames];
    sizes.extend(&cfg.hidden);
    sizes.push(cfg.dim);
    let layers = sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            DenseLayer {
                weights: Array2::from_shape_simple_fn((fan_in, fan_out), || rng.gen_range(-limit..=limit)),
                biases: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(EmbeddingModel {
        layers,
        norm: InputNorm::identity(cfg.bands, cfg.frames),
    })
}

impl EmbeddingModel {
    /// Builds a model from explicit layers; shapes must chain.
    pub fn from_layers(layers: Vec<DenseLayer>, norm: InputNorm) -> Result<Self> {
        let model = Self { layers, norm };
        model.check_shapes()?;
        Ok(model)
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("model has no layers"));
        }
        let mut width = self.norm.features();
        if self.norm.mean.len() != width || self.norm.std.len() != width {
            return Err(Error::invalid("normalization stats do not match the window shape"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.fan_in() != width || l.biases.len() != l.fan_out() || l.fan_out() == 0 {
                return Err(Error::ShapeMismatch {
                    expected: format!("layer {i} with {width} inputs"),
                    actual: format!("{:?} weights, {} biases", l.weights.dim(), l.biases.len()),
                });
            }
            width = l.fan_out();
        }
        if width < 2 {
            return Err(Error::invalid("output dimension must be at least 2"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::fan_out)
    }

    pub fn window_shape(&self) -> (usize, usize) {
        (self.norm.bands, self.norm.frames)
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|v| v.is_finite()))
    }

    /// Flattens windows (row-major `bands x frames`) into batch rows, validating shape and values.
    pub fn stack_windows<'a, I>(&self, windows: I) -> Result<Array2<f64>>
    where
        I: IntoIterator<Item = ArrayView2<'a, f64>>,
    {
        let shape = self.window_shape();
        let mut data = Vec::new();
        let mut rows = 0;
        for w in windows {
            if w.dim() != shape {
                return Err(Error::ShapeMismatch {
                    expected: format!("{shape:?} window"),
                    actual: format!("{:?}", w.dim()),
                });
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("window contains non-finite values"));
            }
            data.extend(w.iter().copied());
            rows += 1;
        }
        Ok(Array2::from_shape_vec((rows, shape.0 * shape.1), data).expect("rows x features"))
    }

    /// Batched forward pass over flattened raw windows (one per row).
    pub fn forward_batch(&self, raw: ArrayView2<f64>) -> ForwardCache {
        let mut x = raw.to_owned();
        x -= &self.norm.mean;
        x /= &self.norm.std;
        let mut inputs = vec![x];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = inputs[i].dot(&layer.weights) + &layer.biases;
            if i + 1 < self.layers.len() {
                inputs.push(z.mapv(|v| v.max(0.0)));
            }
            pre.push(z);
        }
        let z = pre.last().expect("at least one layer");
        let norms = z.map_axis(Axis(1), |r| r.dot(&r).sqrt());
        let mut embeddings = z.clone();
        for (mut row, &n) in embeddings.rows_mut().into_iter().zip(norms.iter()) {
            if n > 0.0 {
                row /= n;
            } else {
                // degenerate output maps to the first basis vector
                row.fill(0.0);
                row[0] = 1.0;
            }
        }
        ForwardCache {
            inputs,
            pre,
            norms,
            embeddings,
        }
    }

    /// Embeds a single `bands x frames` window; the result has unit L2 norm.
    pub fn forward(&self, window: ArrayView2<f64>) -> Result<Array1<f64>> {
        let raw = self.stack_windows(std::iter::once(window))?;
        Ok(self.forward_batch(raw.view()).embeddings.row(0).to_owned())
    }

    /// Embeds many windows at once.
    pub fn embed<'a, I>(&self, windows: I) -> Result<Array2<f64>>
    where
        I: IntoIterator<Item = ArrayView2<'a, f64>>,
    {
        let raw = self.stack_windows(windows)?;
        Ok(self.forward_batch(raw.view()).embeddings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelConfig {
        ModelConfig {
            bands: 4,
            frames: 3,
            hidden: vec![5],
            dim: 3,
            seed: 1,
        }
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = init_model(&small()).unwrap();
        let b = init_model(&small()).unwrap();
        for (x, y) in a.layers.iter().zip(&b.layers) {
            assert!(x.weights.iter().zip(y.weights.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
            assert!(x.biases.iter().all(|&v| v == 0.0));
        }
        let limit = (6.0f64 / 17.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|v| v.abs() <= limit));
    }

    #[test]
    fn default_layer_shapes() {
        let cfg = ModelConfig {
            bands: 40,
            frames: 96,
            hidden: vec![256, 128],
            dim: 64,
            seed: 0,
        };
        let m = init_model(&cfg).unwrap();
        let shapes: Vec<_> = m.layers.iter().map(|l| l.weights.dim()).collect();
        assert_eq!(shapes, vec![(3840, 256), (256, 128), (128, 64)]);
    }

    #[test]
    fn init_rejects_bad_configs() {
        let mut c = small();
        c.dim = 1;
        assert!(init_model(&c).is_err());
        let mut c = small();
        c.hidden = vec![];
        assert!(init_model(&c).is_err());
        let mut c = small();
        c.hidden = vec![4, 0];
        assert!(init_model(&c).is_err());
    }

    #[test]
    fn outputs_unit_norm_and_pure() {
        use rand::SeedableRng;
        let m = init_model(&small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w = Array2::from_shape_simple_fn((4, 3), || rng.gen_range(-5.0..5.0));
            let e = m.forward(w.view()).unwrap();
            assert!((e.dot(&e).sqrt() - 1.0).abs() < 1e-6);
            assert_eq!(e, m.forward(w.view()).unwrap());
        }
    }

    #[test]
    fn zero_output_falls_back_to_first_axis() {
        let mut m = init_model(&small()).unwrap();
        for l in &mut m.layers {
            l.weights.fill(0.0);
        }
        let e = m.forward(Array2::ones((4, 3)).view()).unwrap();
        assert_eq!(e.to_vec(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_shape_and_non_finite_input() {
        let m = init_model(&small()).unwrap();
        assert!(matches!(m.forward(Array2::zeros((3, 4)).view()), Err(Error::ShapeMismatch { .. })));
        let mut w = Array2::zeros((4, 3));
        w[[1, 1]] = f64::NAN;
        assert!(m.forward(w.view()).is_err());
    }

    #[test]
    fn norm_fit_guards_constant_features() {
        let s = ndarray::array![[1.0, 5.0], [3.0, 5.0]];
        let n = InputNorm::fit(1, 2, s.view()).unwrap();
        assert_eq!(n.mean.to_vec(), vec![2.0, 5.0]);
        assert_eq!(n.std.to_vec(), vec![1.0, 1.0]);
    }
}
