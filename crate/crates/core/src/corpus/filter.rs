use std::f64::consts::PI;

/// Direct-form-I biquad with normalized coefficients (`a0 = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn from_raw(b: [f64; 3], a: [f64; 3]) -> Self {
        Self {
            b: [b[0] / a[0], b[1] / a[0], b[2] / a[0]],
            a: [a[1] / a[0], a[2] / a[0]],
        }
    }

    /// Butterworth-Q low-pass (audio EQ cookbook).
    pub fn lowpass(cutoff_hz: f64, sample_rate: f64) -> Self {
        let (cos_w, alpha) = Self::prewarp(cutoff_hz, sample_rate, std::f64::consts::FRAC_1_SQRT_2);
        Self::from_raw(
            [(1.0 - cos_w) / 2.0, 1.0 - cos_w, (1.0 - cos_w) / 2.0],
            [1.0 + alpha, -2.0 * cos_w, 1.0 - alpha],
        )
    }

    pub fn highpass(cutoff_hz: f64, sample_rate: f64) -> Self {
        let (cos_w, alpha) = Self::prewarp(cutoff_hz, sample_rate, std::f64::consts::FRAC_1_SQRT_2);
        Self::from_raw(
            [(1.0 + cos_w) / 2.0, -(1.0 + cos_w), (1.0 + cos_w) / 2.0],
            [1.0 + alpha, -2.0 * cos_w, 1.0 - alpha],
        )
    }

    /// Constant 0 dB peak-gain band-pass.
    pub fn bandpass(center_hz: f64, q: f64, sample_rate: f64) -> Self {
        let (cos_w, alpha) = Self::prewarp(center_hz, sample_rate, q);
        Self::from_raw([alpha, 0.0, -alpha], [1.0 + alpha, -2.0 * cos_w, 1.0 - alpha])
    }

    fn prewarp(freq: f64, sample_rate: f64, q: f64) -> (f64, f64) {
        let w0 = 2.0 * PI * freq / sample_rate;
        (w0.cos(), w0.sin() / (2.0 * q))
    }

    /// Both poles strictly inside the unit circle (stability triangle).
    pub fn is_stable(&self) -> bool {
        let [a1, a2] = self.a;
        a2.abs() < 1.0 && a1.abs() < 1.0 + a2
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        input
            .iter()
            .map(|&x| {
                let y = self.b[0] * x + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
                x2 = x1;
                x1 = x;
                y2 = y1;
                y1 = y;
                y
            })
            .collect()
    }
}

/// Applies a cascade of sections in order.
pub fn cascade(sections: &[Biquad], input: &[f64]) -> Vec<f64> {
    sections
        .iter()
        .fold(input.to_vec(), |signal, section| section.apply(&signal))
}
