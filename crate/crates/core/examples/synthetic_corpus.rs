//! Writes a small multi-scenario corpus and prints a spectral summary per scenario.
//!
//! cargo run --release --example synthetic_corpus -- [out_dir]

use std::collections::BTreeMap;
use std::path::PathBuf;

use scenaware::corpus::scenario::spectral_centroid;
use scenaware::corpus::{generate_corpus, CorpusConfig};
use scenaware::dsp::load_waveform;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "corpus_out".into()));
    let cfg = CorpusConfig {
        utts_per_scenario: 8,
        ..CorpusConfig::default()
    };
    let manifest = generate_corpus(&cfg, &out)?;
    println!("{} utterances under {}", manifest.len(), out.display());

    let mut per_label: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for e in &manifest.entries {
        let w = load_waveform(&manifest.audio_path(e))?;
        per_label.entry(e.label.clone()).or_default().push(spectral_centroid(&w.samples, w.sample_rate));
    }
    for (label, c) in per_label {
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        println!("{label:>18}: mean spectral centroid {mean:7.1} Hz over {} files", c.len());
    }
    Ok(())
}
