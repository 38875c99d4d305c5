use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};

use crate::error::{Error, Result};

pub const SUPPORTED_RATES: [u32; 2] = [8000, 16000];

/// Mono PCM audio scaled to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if !SUPPORTED_RATES.contains(&sample_rate) {
            return Err(Error::invalid(format!(
                "sample rate {sample_rate} Hz not in {SUPPORTED_RATES:?}"
            )));
        }
        if let Some(bad) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::invalid(format!(
                "sample {bad} is {} (must be finite and within [-1, 1])",
                samples[bad]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

fn unsupported(path: &Path, reason: impl Into<String>) -> Error {
    Error::UnsupportedAudio {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads a mono 16-bit PCM WAV at 8 or 16 kHz.
pub fn load_waveform(path: &Path) -> Result<Waveform> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    let mut reader = hound::WavReader::open(path).map_err(|e| unsupported(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(unsupported(
            path,
            format!(
                "need 16-bit integer PCM, found {:?} {}-bit",
                spec.sample_format, spec.bits_per_sample
            ),
        ));
    }
    if spec.channels != 1 {
        return Err(unsupported(
            path,
            format!("need mono, found {} channels", spec.channels),
        ));
    }
    if !SUPPORTED_RATES.contains(&spec.sample_rate) {
        return Err(unsupported(
            path,
            format!("sample rate {} Hz not supported", spec.sample_rate),
        ));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| unsupported(path, format!("truncated or corrupt sample data: {e}")))?;
    Ok(Waveform {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Quantizes to 16-bit and writes a mono PCM WAV.
pub fn write_waveform(path: &Path, waveform: &Waveform) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: waveform.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => unsupported(path, other.to_string()),
    };
    let mut writer = WavWriter::create(path, spec).map_err(wrap)?;
    for &s in &waveform.samples {
        writer.write_sample(quantize(s)).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}

pub fn quantize(sample: f64) -> i16 {
    (sample * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, rate: u32, channels: u16, bits: u16, data: &[i16]) {
        let spec = WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: bits,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &d in data {
            if bits == 16 {
                w.write_sample(d).unwrap();
            } else {
                w.write_sample(d as i32).unwrap();
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn zero_file_loads_as_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.wav");
        write_raw(&p, 16000, 1, 16, &vec![0; 16000]);
        let w = load_waveform(&p).unwrap();
        assert_eq!(w.sample_rate, 16000);
        assert_eq!(w.samples.len(), 16000);
        assert!(w.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn most_negative_value_scales_to_minus_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.wav");
        write_raw(&p, 8000, 1, 16, &[-32768, 32767, 0]);
        let w = load_waveform(&p).unwrap();
        assert_eq!(w.samples[0], -1.0);
        assert_eq!(w.samples[1], 32767.0 / 32768.0);
    }

    #[test]
    fn rejects_stereo_rate_and_depth() {
        let dir = tempfile::tempdir().unwrap();
        let stereo = dir.path().join("s.wav");
        write_raw(&stereo, 8000, 2, 16, &[0, 0, 0, 0]);
        let e = load_waveform(&stereo).unwrap_err().to_string();
        assert!(e.contains("mono"), "{e}");

        let rate = dir.path().join("r.wav");
        write_raw(&rate, 44100, 1, 16, &[0; 8]);
        let e = load_waveform(&rate).unwrap_err().to_string();
        assert!(e.contains("44100"), "{e}");

        let depth = dir.path().join("d.wav");
        write_raw(&depth, 8000, 1, 24, &[0; 8]);
        let e = load_waveform(&depth).unwrap_err().to_string();
        assert!(e.contains("16-bit"), "{e}");
    }

    #[test]
    fn rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        write_raw(&p, 8000, 1, 16, &[100; 400]);
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 101]).unwrap();
        assert!(load_waveform(&p).is_err());
        std::fs::write(&p, &bytes[..20]).unwrap();
        assert!(load_waveform(&p).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = load_waveform(Path::new("/nonexistent/x.wav")).unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
    }

    #[test]
    fn waveform_rejects_out_of_range_samples() {
        assert!(Waveform::new(vec![0.0, 1.5], 8000).is_err());
        assert!(Waveform::new(vec![f64::NAN], 8000).is_err());
        assert!(Waveform::new(vec![0.0], 22050).is_err());
    }
}
