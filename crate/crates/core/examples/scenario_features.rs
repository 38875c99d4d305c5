//! Scenario vectors and per-frame `[mfcc ; aux ; scenario]` features for a few utterances.

use scenaware::corpus::{generate_corpus, CorpusConfig};
use scenaware::dsp::DspConfig;
use scenaware::embedder::ModelConfig;
use scenaware::features::{assemble_features, embed_utterance, scenario_vector};
use scenaware::pipeline::extract_all;
use scenaware::training::initial_model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("scenaware_scenario_features");
    let manifest = generate_corpus(
        &CorpusConfig {
            utts_per_scenario: 1,
            ..CorpusConfig::default()
        },
        &dir,
    )?;
    let utts = extract_all(&manifest, &DspConfig::default())?;
    let clips: Vec<_> = utts.iter().map(|u| u.windows.clone()).collect();
    // an untrained model is enough to show the shapes
    let model = initial_model(&clips, &ModelConfig::default(), 7)?;

    let aux = vec![0.25; 100];
    for u in &utts {
        let emb = embed_utterance(&model, &u.windows)?;
        let sv = scenario_vector(&u.entry.utt_id, emb.view())?;
        let feats = assemble_features(&u.mfcc, Some(&aux), &sv)?;
        println!(
            "{:>24}: {} windows -> scenario |n| = {:.3}, features {:?} (base {} + scenario {})",
            u.entry.utt_id,
            sv.num_windows_averaged,
            sv.values.dot(&sv.values).sqrt(),
            feats.frames.dim(),
            feats.base_dims,
            feats.scenario_dims
        );
    }
    Ok(())
}
