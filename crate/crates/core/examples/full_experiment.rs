//! End-to-end run: synthetic corpus, training, and evaluation of both the
//! untrained and the trained embedder.
//!
//! cargo run --release --example full_experiment -- [out_dir] [steps]

use std::path::PathBuf;
use std::time::Instant;

use scenaware::corpus::{generate_corpus, CorpusConfig};
use scenaware::dsp::DspConfig;
use scenaware::embedder::ModelConfig;
use scenaware::eval::{compute_metrics, embed_corpus, evaluate, EvalConfig};
use scenaware::pipeline::extract_all;
use scenaware::sampling::SamplerConfig;
use scenaware::training::{initial_model, train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "experiment_out".into()));
    let steps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);

    let started = Instant::now();
    let manifest = generate_corpus(&CorpusConfig::default(), &out.join("corpus"))?;
    let dsp = DspConfig::default();
    let utts = extract_all(&manifest, &dsp)?;
    println!("corpus: {} utterances in {:.1?}", utts.len(), started.elapsed());

    let model_cfg = ModelConfig::default();
    let eval_cfg = EvalConfig::default();
    let clips: Vec<_> = utts.iter().map(|u| u.windows.clone()).collect();
    let cfg = TrainConfig {
        steps,
        ..TrainConfig::default()
    };
    let untrained = initial_model(&clips, &model_cfg, cfg.seed)?;
    let m = compute_metrics(&embed_corpus(&untrained, &utts)?, &eval_cfg)?;
    println!("untrained: {m:?}");

    let outcome = train(&clips, &SamplerConfig::default(), &model_cfg, &cfg, Some(&out.join("model")))?;
    println!("trained in {:.1?}", started.elapsed());

    let report = evaluate(&manifest, &outcome.model, &eval_cfg, &out.join("eval"))?;
    println!("{}", report.to_json());
    println!("total {:.1?}", started.elapsed());
    Ok(())
}
