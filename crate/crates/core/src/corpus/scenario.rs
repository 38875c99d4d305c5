//! Synthetic acoustic scenarios: a speech-like harmonic carrier mixed with a
//! scenario-specific noise or channel at a fixed SNR.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};

use super::filter::{cascade, Biquad};
use crate::error::{Error, Result};

pub const SNR_RANGE_DB: (f64, f64) = (-5.0, 30.0);

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    /// Gaussian noise with power spectrum `1 / f^exponent` (1.0 is pink).
    ColoredNoise { exponent: f64 },
    /// Mains hum: `harmonics` partials of `fundamental_hz`, amplitude ratio `decay` per step.
    HarmonicHum {
        fundamental_hz: f64,
        harmonics: usize,
        decay: f64,
    },
    /// Band-limited channel: carrier and white noise both pass a 4th-order band-pass.
    BandpassChannel { low_hz: f64, high_hz: f64 },
    /// Poisson clicks with exponentially decaying noise bursts.
    Impulsive { rate_hz: f64, decay_ms: f64 },
    /// Narrowband noise with slow random amplitude modulation.
    BabbleLike {
        center_hz: f64,
        bandwidth_hz: f64,
        mod_rate_hz: f64,
    },
}

impl NoiseKind {
    /// Applies `f(param_index, value)` to every continuous parameter.
    fn map_params(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        match *self {
            NoiseKind::ColoredNoise { exponent } => NoiseKind::ColoredNoise { exponent: f(0, exponent) },
            NoiseKind::HarmonicHum {
                fundamental_hz,
                harmonics,
                decay,
            } => NoiseKind::HarmonicHum {
                fundamental_hz: f(0, fundamental_hz),
                harmonics,
                decay: f(1, decay).min(1.0),
            },
            NoiseKind::BandpassChannel { low_hz, high_hz } => NoiseKind::BandpassChannel {
                low_hz: f(0, low_hz),
                high_hz: f(1, high_hz),
            },
            NoiseKind::Impulsive { rate_hz, decay_ms } => NoiseKind::Impulsive {
                rate_hz: f(0, rate_hz),
                decay_ms: f(1, decay_ms),
            },
            NoiseKind::BabbleLike {
                center_hz,
                bandwidth_hz,
                mod_rate_hz,
            } => NoiseKind::BabbleLike {
                center_hz: f(0, center_hz),
                bandwidth_hz: f(1, bandwidth_hz),
                mod_rate_hz: f(2, mod_rate_hz),
            },
        }
    }

    /// Scales every continuous parameter by an independent factor drawn from
    /// `[1 - spread, 1 + spread]`.
    pub fn jittered<R: Rng>(&self, spread: f64, rng: &mut R) -> Self {
        if spread == 0.0 {
            return self.clone();
        }
        self.map_params(|_, v| v * rng.gen_range(1.0 - spread..=1.0 + spread))
    }

    /// All parameter combinations at the edges of `[1 - spread, 1 + spread]`.
    pub fn corners(&self, spread: f64) -> Vec<Self> {
        (0..8u32)
            .map(|mask| {
                self.map_params(|i, v| if mask >> i & 1 == 1 { v * (1.0 + spread) } else { v * (1.0 - spread) })
            })
            .collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::ColoredNoise { .. } => "colored_noise",
            NoiseKind::HarmonicHum { .. } => "harmonic_hum",
            NoiseKind::BandpassChannel { .. } => "bandpass_channel",
            NoiseKind::Impulsive { .. } => "impulsive",
            NoiseKind::BabbleLike { .. } => "babble_like",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub label: String,
    pub noise: NoiseKind,
    pub snr_db: f64,
}

impl ScenarioSpec {
    pub fn new(label: impl Into<String>, noise: NoiseKind, snr_db: f64) -> Self {
        Self {
            label: label.into(),
            noise,
            snr_db,
        }
    }

    /// Checks SNR range, positive parameters and filter stability at `sample_rate`.
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        let bad = |why: String| Err(Error::invalid(format!("scenario {:?}: {why}", self.label)));
        if self.label.is_empty() || self.label.contains(['\t', '\n']) {
            return bad("label must be non-empty without tabs or newlines".into());
        }
        if !(SNR_RANGE_DB.0..=SNR_RANGE_DB.1).contains(&self.snr_db) {
            return bad(format!("snr {} dB outside {SNR_RANGE_DB:?}", self.snr_db));
        }
        let in_band = |f: f64| f > 0.0 && f < nyquist;
        match self.noise {
            NoiseKind::ColoredNoise { exponent } => {
                if !(0.0..=3.0).contains(&exponent) {
                    return bad(format!("colour exponent {exponent} outside [0, 3]"));
                }
            }
            NoiseKind::HarmonicHum {
                fundamental_hz,
                harmonics,
                decay,
            } => {
                if harmonics == 0 || !in_band(fundamental_hz * harmonics as f64) {
                    return bad("hum partials must be non-empty and below Nyquist".into());
                }
                if !(decay > 0.0 && decay <= 1.0) {
                    return bad(format!("hum decay {decay} outside (0, 1]"));
                }
            }
            NoiseKind::BandpassChannel { low_hz, high_hz } => {
                if !(in_band(low_hz) && in_band(high_hz) && low_hz < high_hz) {
                    return bad(format!("band {low_hz}-{high_hz} Hz invalid"));
                }
            }
            NoiseKind::Impulsive { rate_hz, decay_ms } => {
                if !(rate_hz > 0.0 && decay_ms > 0.0) {
                    return bad("click rate and decay must be positive".into());
                }
            }
            NoiseKind::BabbleLike {
                center_hz,
                bandwidth_hz,
                mod_rate_hz,
            } => {
                if !(in_band(center_hz) && bandwidth_hz > 0.0 && mod_rate_hz > 0.0) {
                    return bad("babble centre, bandwidth and modulation must be positive and in band".into());
                }
            }
        }
        if let Some(sections) = self.filters(sample_rate) {
            if !sections.iter().all(Biquad::is_stable) {
                return bad("filter design is unstable".into());
            }
        }
        Ok(())
    }

    fn filters(&self, sample_rate: u32) -> Option<Vec<Biquad>> {
        let sr = sample_rate as f64;
        match self.noise {
            NoiseKind::BandpassChannel { low_hz, high_hz } => Some(vec![
                Biquad::highpass(low_hz, sr),
                Biquad::highpass(low_hz, sr),
                Biquad::lowpass(high_hz, sr),
                Biquad::lowpass(high_hz, sr),
            ]),
            NoiseKind::BabbleLike {
                center_hz,
                bandwidth_hz,
                ..
            } => {
                let q = center_hz / bandwidth_hz;
                Some(vec![Biquad::bandpass(center_hz, q, sr), Biquad::bandpass(center_hz, q, sr)])
            }
            _ => None,
        }
    }
}

/// The five default scenarios.
pub fn default_scenarios() -> Vec<ScenarioSpec> {
    vec![
        ScenarioSpec::new(
            "harmonic_hum",
            NoiseKind::HarmonicHum {
                fundamental_hz: 60.0,
                harmonics: 5,
                decay: 0.6,
            },
            DEFAULT_SNR_DB,
        ),
        ScenarioSpec::new("colored_noise", NoiseKind::ColoredNoise { exponent: 1.0 }, DEFAULT_SNR_DB),
        ScenarioSpec::new(
            "bandpass_channel",
            NoiseKind::BandpassChannel {
                low_hz: 300.0,
                high_hz: 2400.0,
            },
            DEFAULT_SNR_DB,
        ),
        ScenarioSpec::new(
            "impulsive",
            NoiseKind::Impulsive {
                rate_hz: 6.0,
                decay_ms: 3.0,
            },
            DEFAULT_SNR_DB,
        ),
        ScenarioSpec::new(
            "babble_like",
            NoiseKind::BabbleLike {
                center_hz: 800.0,
                bandwidth_hz: 400.0,
                mod_rate_hz: 3.0,
            },
            DEFAULT_SNR_DB,
        ),
    ]
}

pub const DEFAULT_SNR_DB: f64 = 20.0;

/// Peak absolute sample value of every synthesized mix.
pub const OUTPUT_PEAK: f64 = 0.5;

/// Pre-mix components and their sum, all scaled by the same output gain.
#[derive(Debug, Clone)]
pub struct SynthUtterance {
    pub carrier: Vec<f64>,
    pub noise: Vec<f64>,
    pub mix: Vec<f64>,
}

pub fn power(signal: &[f64]) -> f64 {
    if signal.is_empty() {
        return 0.0;
    }
    signal.iter().map(|v| v * v).sum::<f64>() / signal.len() as f64
}

/// Speech-like carrier: 3-5 harmonics of a random-walk pitch under a 2-8 Hz
/// amplitude envelope. Each envelope cycle is one "syllable" and redraws which
/// harmonics sound, how loud, and the next syllable rate, at the envelope zero
/// so no click is produced.
pub fn speech_carrier<R: Rng>(len: usize, sample_rate: u32, rng: &mut R) -> Vec<f64> {
    let sr = sample_rate as f64;
    let draw_partials = |rng: &mut R| -> Vec<(usize, f64)> {
        let count = rng.gen_range(3..=5);
        let mut numbers: Vec<usize> = rand::seq::index::sample(rng, 12, count)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        numbers.sort_unstable();
        numbers.into_iter().map(|h| (h, rng.gen_range(0.3..1.0))).collect()
    };
    let mut am_rate = rng.gen_range(2.0..8.0);
    let mut partials = draw_partials(rng);
    let mut phases: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();

    let (lo, hi) = (70f64.ln(), 300f64.ln());
    let mut log_f0 = rng.gen_range(90f64.ln()..220f64.ln());
    let block = (sr * 0.01) as usize;

    let mut out = Vec::with_capacity(len);
    // envelope phase in cycles; starts mid-syllable at a random point
    let mut syllable_pos = rng.gen_range(0.0..1.0);
    for n in 0..len {
        if n % block == 0 && n > 0 {
            let step: f64 = rng.sample::<f64, _>(StandardNormal) * 0.03;
            log_f0 += step;
            if log_f0 > hi {
                log_f0 = 2.0 * hi - log_f0;
            }
            if log_f0 < lo {
                log_f0 = 2.0 * lo - log_f0;
            }
        }
        let f0 = log_f0.exp();
        let env = (0.5 - 0.5 * (2.0 * PI * syllable_pos).cos()).powf(1.5);
        syllable_pos += am_rate / sr;
        if syllable_pos >= 1.0 {
            syllable_pos -= 1.0;
            am_rate = rng.gen_range(2.0..8.0);
            partials = draw_partials(rng);
        }
        let mut v = 0.0;
        for (h, phase) in phases.iter_mut().enumerate() {
            let number = h + 1;
            let freq = f0 * number as f64;
            if let Some(&(_, a)) = partials.iter().find(|p| p.0 == number) {
                if freq < sr / 2.0 {
                    v += a * phase.sin();
                }
            }
            *phase = (*phase + 2.0 * PI * freq / sr) % (2.0 * PI);
        }
        out.push(env * v);
    }
    out
}

fn white<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn colored<R: Rng>(len: usize, exponent: f64, sample_rate: u32, rng: &mut R) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = white(len, rng).into_iter().map(|v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let sr = sample_rate as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(len - k);
        if bin == 0 {
            *c = Complex::new(0.0, 0.0);
            continue;
        }
        let f = (bin as f64 * sr / len as f64).max(20.0);
        *c *= f.powf(-exponent / 2.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

fn hum<R: Rng>(len: usize, fundamental: f64, harmonics: usize, decay: f64, sample_rate: u32, rng: &mut R) -> Vec<f64> {
    let sr = sample_rate as f64;
    let partials: Vec<(f64, f64, f64)> = (1..=harmonics)
        .map(|h| {
            (
                fundamental * h as f64,
                decay.powi(h as i32 - 1),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    (0..len)
        .map(|n| {
            let t = n as f64 / sr;
            partials
                .iter()
                .map(|(f, a, p)| a * (2.0 * PI * f * t + p).sin())
                .sum()
        })
        .collect()
}

fn clicks<R: Rng>(len: usize, rate_hz: f64, decay_ms: f64, sample_rate: u32, rng: &mut R) -> Vec<f64> {
    let sr = sample_rate as f64;
    let mut out = vec![0.0; len];
    let gap = Exp::new(rate_hz).expect("positive rate");
    let decay = decay_ms / 1000.0 * sr;
    let tail = (decay * 5.0).ceil() as usize;
    let mut t = gap.sample(rng);
    loop {
        let start = (t * sr) as usize;
        if start >= len {
            break;
        }
        let amp = rng.gen_range(0.3..1.0);
        for (i, slot) in out[start..(start + tail).min(len)].iter_mut().enumerate() {
            *slot += amp * (-(i as f64) / decay).exp() * rng.sample::<f64, _>(StandardNormal);
        }
        t += gap.sample(rng);
    }
    out
}

fn slow_envelope<R: Rng>(len: usize, rate_hz: f64, sample_rate: u32, rng: &mut R) -> Vec<f64> {
    let sr = sample_rate as f64;
    let (p1, p2) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
    (0..len)
        .map(|n| {
            let t = n as f64 / sr;
            (0.55 + 0.45 * (2.0 * PI * rate_hz * t + p1).sin())
                * (0.55 + 0.45 * (2.0 * PI * 1.7 * rate_hz * t + p2).sin())
        })
        .collect()
}

/// Synthesizes one utterance of `len` samples for `spec`. The mix is scaled to a
/// peak of [`OUTPUT_PEAK`]; carrier and noise share that gain.
pub fn synthesize<R: Rng>(spec: &ScenarioSpec, len: usize, sample_rate: u32, rng: &mut R) -> Result<SynthUtterance> {
    spec.validate(sample_rate)?;
    if len == 0 {
        return Err(Error::invalid("cannot synthesize an empty utterance"));
    }
    let mut carrier = speech_carrier(len, sample_rate, rng);
    let noise = match spec.noise {
        NoiseKind::ColoredNoise { exponent } => colored(len, exponent, sample_rate, rng),
        NoiseKind::HarmonicHum {
            fundamental_hz,
            harmonics,
            decay,
        } => hum(len, fundamental_hz, harmonics, decay, sample_rate, rng),
        NoiseKind::BandpassChannel { .. } => {
            let sections = spec.filters(sample_rate).expect("band-pass has filters");
            carrier = cascade(&sections, &carrier);
            cascade(&sections, &white(len, rng))
        }
        NoiseKind::Impulsive { rate_hz, decay_ms } => clicks(len, rate_hz, decay_ms, sample_rate, rng),
        NoiseKind::BabbleLike { mod_rate_hz, .. } => {
            let sections = spec.filters(sample_rate).expect("babble has filters");
            let band = cascade(&sections, &white(len, rng));
            let env = slow_envelope(len, mod_rate_hz, sample_rate, rng);
            band.iter().zip(&env).map(|(b, e)| b * e).collect()
        }
    };

    let carrier_power = power(&carrier);
    let noise_power = power(&noise);
    let noise_gain = if noise_power > 0.0 && carrier_power > 0.0 {
        (carrier_power / (noise_power * 10f64.powf(spec.snr_db / 10.0))).sqrt()
    } else {
        0.0
    };
    let mut noise: Vec<f64> = noise.into_iter().map(|v| v * noise_gain).collect();
    let mut mix: Vec<f64> = carrier.iter().zip(&noise).map(|(c, n)| c + n).collect();

    let peak = mix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { OUTPUT_PEAK / peak } else { 0.0 };
    for s in carrier.iter_mut().chain(noise.iter_mut()).chain(mix.iter_mut()) {
        *s *= gain;
    }
    Ok(SynthUtterance { carrier, noise, mix })
}

/// Power-weighted mean frequency of a signal's spectrum.
pub fn spectral_centroid(signal: &[f64], sample_rate: u32) -> f64 {
    let n = signal.len();
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let (mut num, mut den) = (0.0, 0.0);
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1) {
        let p = c.norm_sqr();
        num += p * k as f64 * sample_rate as f64 / n as f64;
        den += p;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}
