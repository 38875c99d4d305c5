use crate::embedder::{EmbeddingModel, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        for b in [self.beta1, self.beta2] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("Adam beta {b} outside [0, 1)")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update applied elementwise; `t` is the 1-based step.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    first_moment: &mut [f64],
    second_moment: &mut [f64],
    cfg: &AdamConfig,
    t: u64,
) -> Result<()> {
    let n = params.len();
    if grads.len() != n || first_moment.len() != n || second_moment.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} gradients and moments"),
            actual: format!("{}, {}, {}", grads.len(), first_moment.len(), second_moment.len()),
        });
    }
    if t == 0 {
        return Err(Error::invalid("Adam step counter starts at 1"));
    }
    let bias1 = 1.0 - cfg.beta1.powf(t as f64);
    let bias2 = 1.0 - cfg.beta2.powf(t as f64);
    for i in 0..n {
        let g = grads[i];
        first_moment[i] = cfg.beta1 * first_moment[i] + (1.0 - cfg.beta1) * g;
        second_moment[i] = cfg.beta2 * second_moment[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = first_moment[i] / bias1;
        let v_hat = second_moment[i] / bias2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

/// Adam moments for every layer of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Gradients,
    second: Gradients,
    step: u64,
}

impl AdamState {
    pub fn new(model: &EmbeddingModel, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        let zeros = Gradients {
            layers: model.layers.iter().map(|l| l.zeros_like()).collect(),
        };
        Ok(Self {
            config,
            first: zeros.clone(),
            second: zeros,
            step: 0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn apply(&mut self, model: &mut EmbeddingModel, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != model.layers.len() || self.first.layers.len() != model.layers.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} layers", model.layers.len()),
                actual: grads.layers.len().to_string(),
            });
        }
        self.step += 1;
        for (((layer, g), m), v) in model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first.layers)
            .zip(&mut self.second.layers)
        {
            adam_step(
                layer.weights.as_slice_mut().expect("standard layout"),
                g.weights.as_slice().expect("standard layout"),
                m.weights.as_slice_mut().expect("standard layout"),
                v.weights.as_slice_mut().expect("standard layout"),
                &self.config,
                self.step,
            )?;
            adam_step(
                layer.biases.as_slice_mut().expect("contiguous"),
                g.biases.as_slice().expect("contiguous"),
                m.biases.as_slice_mut().expect("contiguous"),
                v.biases.as_slice_mut().expect("contiguous"),
                &self.config,
                self.step,
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let cfg = AdamConfig::default();
        let mut p = [0.3, -1.2];
        let mut m = [0.5, -0.5];
        let mut v = [0.2, 0.1];
        adam_step(&mut p, &[0.0, 0.0], &mut m, &mut v, &cfg, 3).unwrap();
        assert!((m[0] - 0.45).abs() < 1e-15 && (v[0] - 0.1998).abs() < 1e-15);
        // a zero gradient still moves by the remaining momentum; with zero moments it is a no-op
        let mut p2 = [0.3, -1.2];
        adam_step(&mut p2, &[0.0, 0.0], &mut [0.0; 2], &mut [0.0; 2], &cfg, 1).unwrap();
        assert_eq!(p2, [0.3, -1.2]);
        assert!(p[0] != 0.3);
    }

    #[test]
    fn first_step_is_minus_lr() {
        let cfg = AdamConfig::default();
        let mut p = [0.0];
        adam_step(&mut p, &[1.0], &mut [0.0], &mut [0.0], &cfg, 1).unwrap();
        // m_hat = 1, v_hat = 1
        assert!((p[0] - (-0.001 / (1.0 + 1e-8))).abs() < 1e-18);
        assert!((p[0] + 0.000999999).abs() < 1e-9);
    }

    #[test]
    fn constant_gradient_step_tends_to_lr() {
        let cfg = AdamConfig::default();
        let (mut p, mut m, mut v) = ([0.0], [0.0], [0.0]);
        let mut last = 0.0;
        for t in 1..=5000 {
            let before = p[0];
            adam_step(&mut p, &[0.37], &mut m, &mut v, &cfg, t).unwrap();
            last = p[0] - before;
        }
        assert!((last.abs() - 1e-3).abs() < 1e-9, "{last}");
    }

    #[test]
    fn shape_and_step_errors() {
        let cfg = AdamConfig::default();
        assert!(adam_step(&mut [0.0; 2], &[0.0], &mut [0.0; 2], &mut [0.0; 2], &cfg, 1).is_err());
        assert!(adam_step(&mut [0.0], &[0.0], &mut [0.0], &mut [0.0], &cfg, 0).is_err());
        let bad = AdamConfig { beta1: 1.0, ..cfg };
        assert!(bad.validate().is_err());
    }
}
