//! Log-mel, MFCC and context windows for one WAV file.
//!
//! cargo run --example wav_features -- [file.wav]
//!
//! Without an argument a two-tone test file is written to the temp directory.

use std::f64::consts::PI;
use std::path::PathBuf;

use scenaware::dsp::{context_windows, load_waveform, log_mel, mfcc, write_waveform, DspConfig, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let rate = 8000;
            let samples = (0..3 * rate)
                .map(|k| {
                    let t = k as f64 / rate as f64;
                    0.3 * (2.0 * PI * 440.0 * t).sin() + 0.1 * (2.0 * PI * 1800.0 * t).sin()
                })
                .collect();
            let p = std::env::temp_dir().join("scenaware_two_tone.wav");
            write_waveform(&p, &Waveform::new(samples, rate)?)?;
            p
        }
    };
    let cfg = DspConfig::default();
    let wave = load_waveform(&path)?;
    println!("{}: {} samples at {} Hz ({:.2} s)", path.display(), wave.samples.len(), wave.sample_rate, wave.duration_s());

    let lm = log_mel(&wave, cfg.framing, cfg.mel_for(wave.sample_rate))?;
    let frame = lm.frames.row(lm.num_frames() / 2);
    let loudest = frame.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    println!("log-mel {:?}, hop {} s, loudest band in the middle frame: {loudest}", lm.frames.dim(), lm.frame_hop_s);

    let m = mfcc(&lm, cfg.num_ceps)?;
    println!("mfcc {:?}, c0 of the first frame {:.3}", m.frames.dim(), m.frames[[0, 0]]);

    let windows = context_windows(&lm, "demo", cfg.window_frames, cfg.window_hop)?;
    println!("{} context windows of {:?}, hop {} s", windows.len(), windows.window_shape(), windows.window_hop_s);
    Ok(())
}
