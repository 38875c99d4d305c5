//! Short training run on a small synthetic corpus; prints the loss curve.
//!
//! cargo run --release --example train_small -- [steps]

use scenaware::corpus::{generate_corpus, CorpusConfig};
use scenaware::dsp::DspConfig;
use scenaware::embedder::ModelConfig;
use scenaware::sampling::SamplerConfig;
use scenaware::training::{train_from_manifest, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let steps: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(300);
    let dir = tempfile_dir()?;
    let corpus = CorpusConfig {
        utts_per_scenario: 12,
        ..CorpusConfig::default()
    };
    let manifest = generate_corpus(&corpus, &dir.join("corpus"))?;
    let cfg = TrainConfig {
        steps,
        checkpoint_every: 0,
        ..TrainConfig::default()
    };
    let model_cfg = ModelConfig {
        hidden: vec![64],
        dim: 16,
        ..ModelConfig::default()
    };
    let outcome = train_from_manifest(
        &manifest,
        &DspConfig::default(),
        &SamplerConfig::default(),
        &model_cfg,
        &cfg,
        Some(&dir.join("model")),
    )?;
    for p in outcome.curve.iter().filter(|p| p.step % (steps / 10).max(1) == 0) {
        println!("step {:5}  mean loss {:.4}  active {:.2}", p.step, p.mean_loss(), p.active_fraction);
    }
    println!("checkpoint: {}", outcome.checkpoints.last().expect("final checkpoint").display());
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join("scenaware_train_small");
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
