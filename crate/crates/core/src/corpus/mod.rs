//! Dataset manifests and the synthetic multi-scenario corpus generator.

pub mod filter;
pub mod manifest;
pub mod scenario;

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dsp::{self, Waveform};
use crate::error::{Error, Result};
pub use manifest::{load_manifest, parse_manifest, Manifest, ManifestEntry};
pub use scenario::{default_scenarios, synthesize, NoiseKind, ScenarioSpec, SynthUtterance};

pub const DEFAULT_SAMPLE_RATE: u32 = 8000;
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const DEFAULT_PARAM_SPREAD: f64 = 0.5;

/// Shortest audio that yields one default context window (95 hops + one 25 ms frame).
pub const MIN_DURATION_S: f64 = 0.975;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Durations {
    Fixed(f64),
    /// Uniform in `[lo, hi]` seconds per utterance.
    Uniform(f64, f64),
}

impl Default for Durations {
    fn default() -> Self {
        Durations::Uniform(2.0, 10.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub scenarios: Vec<ScenarioSpec>,
    pub utts_per_scenario: usize,
    pub durations: Durations,
    pub sample_rate: u32,
    pub seed: u64,
    /// Relative per-utterance spread of each scenario's noise parameters, in `[0, 0.9]`.
    pub param_spread: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            scenarios: default_scenarios(),
            utts_per_scenario: 100,
            durations: Durations::default(),
            sample_rate: DEFAULT_SAMPLE_RATE,
            seed: 7,
            param_spread: DEFAULT_PARAM_SPREAD,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 scenarios, got {}",
                self.scenarios.len()
            )));
        }
        let mut labels: Vec<&str> = self.scenarios.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.scenarios.len() {
            return Err(Error::invalid("scenario labels must be unique"));
        }
        if self.utts_per_scenario == 0 {
            return Err(Error::invalid("utts_per_scenario must be at least 1"));
        }
        if !dsp::wav::SUPPORTED_RATES.contains(&self.sample_rate) {
            return Err(Error::invalid(format!("unsupported sample rate {}", self.sample_rate)));
        }
        let (lo, hi) = match self.durations {
            Durations::Fixed(d) => (d, d),
            Durations::Uniform(lo, hi) => (lo, hi),
        };
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("bad duration range {lo}..{hi}")));
        }
        if lo < MIN_DURATION_S {
            return Err(Error::TooShort(format!(
                "duration {lo} s is shorter than one context window ({MIN_DURATION_S} s)"
            )));
        }
        if !(0.0..=0.9).contains(&self.param_spread) {
            return Err(Error::invalid(format!("param_spread {} outside [0, 0.9]", self.param_spread)));
        }
        for s in &self.scenarios {
            s.validate(self.sample_rate)?;
            // extreme corners of the spread must also be valid
            for noise in s.noise.corners(self.param_spread) {
                ScenarioSpec { noise, ..s.clone() }.validate(self.sample_rate)?;
            }
        }
        Ok(())
    }
}

/// Per-utterance generator: stream `index` of the corpus seed.
pub fn utterance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Synthesizes utterance `index` of the corpus (scenario-major order).
pub fn synthesize_utterance(cfg: &CorpusConfig, index: usize) -> Result<(ManifestEntry, Waveform)> {
    let spec = &cfg.scenarios[index / cfg.utts_per_scenario];
    let mut rng = utterance_rng(cfg.seed, index as u64);
    let duration = match cfg.durations {
        Durations::Fixed(d) => d,
        Durations::Uniform(lo, hi) if lo < hi => rng.gen_range(lo..=hi),
        Durations::Uniform(lo, _) => lo,
    };
    let len = (duration * cfg.sample_rate as f64).round() as usize;
    let varied = ScenarioSpec {
        noise: spec.noise.jittered(cfg.param_spread, &mut rng),
        ..spec.clone()
    };
    let synth = synthesize(&varied, len, cfg.sample_rate, &mut rng)?;
    let utt_id = format!("{}_{:05}", spec.label, index);
    let entry = ManifestEntry {
        path: format!("wav/{utt_id}.wav"),
        utt_id,
        label: spec.label.clone(),
        duration_s: len as f64 / cfg.sample_rate as f64,
    };
    Ok((entry, Waveform::new(synth.mix, cfg.sample_rate)?))
}

/// Writes `out_dir/wav/*.wav` and `out_dir/manifest.tsv`; output depends only on `cfg`.
pub fn generate_corpus(cfg: &CorpusConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let wav_dir = out_dir.join("wav");
    fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;
    let total = cfg.scenarios.len() * cfg.utts_per_scenario;
    let entries = (0..total)
        .into_par_iter()
        .map(|index| {
            let (entry, wave) = synthesize_utterance(cfg, index)?;
            dsp::write_waveform(&out_dir.join(&entry.path), &wave)?;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        root: out_dir.to_path_buf(),
        entries,
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    log::info!("generated {} utterances in {}", total, out_dir.display());
    Ok(manifest)
}
