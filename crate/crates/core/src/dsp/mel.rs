use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use super::wav::Waveform;
use crate::error::{Error, Result};

/// Energy floor applied before the natural log.
pub const ENERGY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelConfig {
    pub bands: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
}

impl MelConfig {
    /// 40 bands from 60 Hz up to 200 Hz below Nyquist.
    pub fn for_rate(sample_rate: u32) -> Self {
        Self {
            bands: 40,
            fmin_hz: 60.0,
            fmax_hz: sample_rate as f64 / 2.0 - 200.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub frame_len_s: f64,
    pub hop_s: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len_s: 0.025,
            hop_s: 0.010,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogMelSpectrogram {
    /// `num_frames x bands`, natural log of floored mel energy.
    pub frames: Array2<f64>,
    pub frame_hop_s: f64,
    pub mel: MelConfig,
}

impl LogMelSpectrogram {
    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Center frequencies (Hz) of the triangular filters.
pub fn band_centers_hz(mel: &MelConfig) -> Vec<f64> {
    mel_edges_hz(mel)[1..=mel.bands].to_vec()
}

fn mel_edges_hz(mel: &MelConfig) -> Vec<f64> {
    let lo = hz_to_mel(mel.fmin_hz);
    let hi = hz_to_mel(mel.fmax_hz);
    (0..mel.bands + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (mel.bands + 1) as f64))
        .collect()
}

/// Triangular filterbank, `bands x (n_fft / 2 + 1)`, peak weight 1 at each center.
pub fn mel_filterbank(mel: &MelConfig, n_fft: usize, sample_rate: u32) -> Array2<f64> {
    let edges = mel_edges_hz(mel);
    let bins = n_fft / 2 + 1;
    let mut fb = Array2::zeros((mel.bands, bins));
    for b in 0..mel.bands {
        let (left, center, right) = (edges[b], edges[b + 1], edges[b + 2]);
        for k in 0..bins {
            let f = k as f64 * sample_rate as f64 / n_fft as f64;
            let w = if f > left && f <= center {
                (f - left) / (center - left)
            } else if f > center && f < right {
                (right - f) / (right - center)
            } else {
                0.0
            };
            fb[[b, k]] = w;
        }
    }
    fb
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Number of frames for a signal: `1 + (n - frame_len) / hop`, or 0 if shorter than a frame.
pub fn frame_count(num_samples: usize, frame_len: usize, hop: usize) -> usize {
    if num_samples < frame_len {
        0
    } else {
        1 + (num_samples - frame_len) / hop
    }
}

/// Hann-windowed power spectra, one row per frame (`n_fft / 2 + 1` columns).
pub fn power_spectra(samples: &[f64], frame_len: usize, hop: usize, n_fft: usize) -> Array2<f64> {
    let frames = frame_count(samples.len(), frame_len, hop);
    let bins = n_fft / 2 + 1;
    let window = hann(frame_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut out = Array2::zeros((frames, bins));
    for t in 0..frames {
        let start = t * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < frame_len {
                Complex::new(samples[start + i] * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for k in 0..bins {
            out[[t, k]] = buf[k].norm_sqr();
        }
    }
    out
}

/// Log-mel spectrogram: Hann, |DFT|^2, HTK mel filterbank, `ln(max(e, 1e-10))`.
pub fn log_mel(waveform: &Waveform, framing: FrameConfig, mel: MelConfig) -> Result<LogMelSpectrogram> {
    let sr = waveform.sample_rate as f64;
    let frame_len = (framing.frame_len_s * sr).round() as usize;
    let hop = (framing.hop_s * sr).round() as usize;
    if frame_len < 2 {
        return Err(Error::invalid(format!(
            "frame length {frame_len} samples is below 2"
        )));
    }
    if hop == 0 {
        return Err(Error::invalid("hop rounds to 0 samples"));
    }
    if mel.bands == 0 || !(mel.fmin_hz >= 0.0 && mel.fmin_hz < mel.fmax_hz) {
        return Err(Error::invalid(format!("bad mel range {mel:?}")));
    }
    if mel.fmax_hz > sr / 2.0 {
        return Err(Error::invalid(format!(
            "fmax {} Hz above Nyquist {} Hz",
            mel.fmax_hz,
            sr / 2.0
        )));
    }
    if waveform.samples.len() < frame_len {
        return Err(Error::TooShort(format!(
            "{} samples, one frame needs {frame_len}",
            waveform.samples.len()
        )));
    }
    let n_fft = frame_len.next_power_of_two();
    let power = power_spectra(&waveform.samples, frame_len, hop, n_fft);
    let fb = mel_filterbank(&mel, n_fft, waveform.sample_rate);
    let energies = power.dot(&fb.t());
    let frames = energies.mapv(|e| e.max(ENERGY_FLOOR).ln());
    Ok(LogMelSpectrogram {
        frames,
        frame_hop_s: hop as f64 / sr,
        mel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, n: usize, amp: f64) -> Waveform {
        let samples = (0..n)
            .map(|k| amp * (2.0 * PI * freq * k as f64 / rate as f64).sin())
            .collect();
        Waveform::new(samples, rate).unwrap()
    }

    #[test]
    fn silence_hits_energy_floor_everywhere() {
        let w = Waveform::new(vec![0.0; 8000], 8000).unwrap();
        let lm = log_mel(&w, FrameConfig::default(), MelConfig::for_rate(8000)).unwrap();
        let floor = ENERGY_FLOOR.ln();
        assert!(lm.frames.iter().all(|&v| v == floor));
    }

    #[test]
    fn one_khz_tone_peaks_in_nearest_band() {
        let mel = MelConfig::for_rate(16000);
        let w = sine(1000.0, 16000, 16000, 0.5);
        let lm = log_mel(&w, FrameConfig::default(), mel).unwrap();
        // nearest center found analytically from the mel grid
        let centers = band_centers_hz(&mel);
        let nearest = centers
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1000.0).abs().total_cmp(&(b.1 - 1000.0).abs()))
            .unwrap()
            .0;
        for row in lm.frames.rows() {
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, nearest);
        }
    }

    #[test]
    fn shape_follows_frame_count_formula() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 12345;
        let samples: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let w = Waveform::new(samples, 16000).unwrap();
        let lm = log_mel(&w, FrameConfig::default(), MelConfig::for_rate(16000)).unwrap();
        assert_eq!(lm.frames.dim(), (1 + (n - 400) / 160, 40));
        assert!((lm.frame_hop_s - 0.01).abs() < 1e-12);
    }

    #[test]
    fn bin_centered_tone_keeps_energy_in_main_lobe() {
        let n_fft = 256;
        for bin in [5usize, 17, 64, 100] {
            let freq = bin as f64 * 8000.0 / n_fft as f64;
            let w = sine(freq, 8000, n_fft, 1.0);
            let p = power_spectra(&w.samples, n_fft, n_fft, n_fft);
            let total: f64 = p.row(0).sum();
            let lobe: f64 = (bin - 1..=bin + 1).map(|k| p[[0, k]]).sum();
            assert!(lobe / total >= 0.99, "bin {bin}: {}", lobe / total);
        }
    }

    #[test]
    fn deterministic_output() {
        let w = sine(440.0, 8000, 8000, 0.3);
        let a = log_mel(&w, FrameConfig::default(), MelConfig::for_rate(8000)).unwrap();
        let b = log_mel(&w, FrameConfig::default(), MelConfig::for_rate(8000)).unwrap();
        assert!(a
            .frames
            .iter()
            .zip(b.frames.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn rejects_short_input_and_bad_config() {
        let w = Waveform::new(vec![0.0; 100], 8000).unwrap();
        assert!(matches!(
            log_mel(&w, FrameConfig::default(), MelConfig::for_rate(8000)),
            Err(Error::TooShort(_))
        ));
        let w = Waveform::new(vec![0.0; 1000], 8000).unwrap();
        let mut mel = MelConfig::for_rate(8000);
        mel.fmax_hz = 4500.0;
        assert!(log_mel(&w, FrameConfig::default(), mel).is_err());
        let tiny = FrameConfig {
            frame_len_s: 0.0001,
            hop_s: 0.01,
        };
        assert!(log_mel(&w, tiny, MelConfig::for_rate(8000)).is_err());
    }

    #[test]
    fn mel_scale_round_trips() {
        for hz in [0.0, 60.0, 700.0, 1000.0, 3800.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }
}
