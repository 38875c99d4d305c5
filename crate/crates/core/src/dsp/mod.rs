//! Audio front end: WAV ingestion, log-mel spectrograms, MFCCs and context windows.

pub mod mel;
pub mod mfcc;
pub mod wav;
pub mod windows;

pub use mel::{log_mel, FrameConfig, LogMelSpectrogram, MelConfig, ENERGY_FLOOR};
pub use mfcc::{mfcc, MfccMatrix, DEFAULT_CEPS};
pub use wav::{load_waveform, write_waveform, Waveform};
pub use windows::{context_windows, WindowSequence, DEFAULT_WINDOW_FRAMES, DEFAULT_WINDOW_HOP};

/// Front-end settings shared by training, embedding and evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DspConfig {
    pub framing: FrameConfig,
    /// Mel bands; range is derived from the sample rate.
    pub bands: usize,
    pub num_ceps: usize,
    pub window_frames: usize,
    pub window_hop: usize,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            framing: FrameConfig::default(),
            bands: 40,
            num_ceps: DEFAULT_CEPS,
            window_frames: DEFAULT_WINDOW_FRAMES,
            window_hop: DEFAULT_WINDOW_HOP,
        }
    }
}

impl DspConfig {
    pub fn mel_for(&self, sample_rate: u32) -> MelConfig {
        MelConfig {
            bands: self.bands,
            ..MelConfig::for_rate(sample_rate)
        }
    }
}
