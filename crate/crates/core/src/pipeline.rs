//! Manifest-level feature extraction shared by training, embedding and evaluation.

use rayon::prelude::*;

use crate::corpus::{Manifest, ManifestEntry};
use crate::dsp::{self, DspConfig, LogMelSpectrogram, MfccMatrix, WindowSequence};
use crate::error::Result;

/// Front-end output for one utterance.
#[derive(Debug, Clone)]
pub struct UtteranceFeatures {
    pub entry: ManifestEntry,
    pub logmel: LogMelSpectrogram,
    pub mfcc: MfccMatrix,
    pub windows: WindowSequence,
}

pub fn extract_utterance(manifest: &Manifest, entry: &ManifestEntry, cfg: &DspConfig) -> Result<UtteranceFeatures> {
    let wave = dsp::load_waveform(&manifest.audio_path(entry))?;
    let logmel = dsp::log_mel(&wave, cfg.framing, cfg.mel_for(wave.sample_rate))?;
    let mfcc = dsp::mfcc(&logmel, cfg.num_ceps)?;
    let windows = dsp::context_windows(&logmel, &entry.utt_id, cfg.window_frames, cfg.window_hop)?;
    Ok(UtteranceFeatures {
        entry: entry.clone(),
        logmel,
        mfcc,
        windows,
    })
}

/// Extracts every manifest entry in order. Utterances too short for one context
/// window are dropped with a warning.
pub fn extract_all(manifest: &Manifest, cfg: &DspConfig) -> Result<Vec<UtteranceFeatures>> {
    let all = manifest
        .entries
        .par_iter()
        .map(|entry| extract_utterance(manifest, entry, cfg))
        .collect::<Result<Vec<_>>>()?;
    let (kept, skipped): (Vec<_>, Vec<_>) = all.into_iter().partition(|u| !u.windows.is_empty());
    for u in &skipped {
        log::warn!("skipping {}: shorter than one context window", u.entry.utt_id);
    }
    Ok(kept)
}
