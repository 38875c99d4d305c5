//! Triplets from both sampling modes, and semi-hard mining on a toy batch.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scenaware::sampling::{assemble_batch_from_lengths, mine_semi_hard, SamplerConfig, SamplingMode, TripletSampler};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // window counts of four clips, windows every 0.48 s
    let lengths = [12, 3, 0, 20];
    for mode in [SamplingMode::Temporal, SamplingMode::Clip] {
        let cfg = SamplerConfig {
            mode,
            tau_s: 1.5,
            ..SamplerConfig::default()
        };
        let mut sampler = TripletSampler::from_lengths(&lengths, 0.48, &cfg)?;
        println!("{mode} (tau_w = {}), {} eligible anchors", sampler.tau_w(), sampler.anchors().len());
        for _ in 0..4 {
            let t = sampler.sample();
            println!(
                "  anchor {:?}  positive {:?}  negative {:?}",
                (t.anchor.clip, t.anchor.index),
                (t.positive.clip, t.positive.index),
                (t.negative.clip, t.negative.index)
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let batch = assemble_batch_from_lengths(&lengths, 3, 2, &mut rng)?;
    let mut emb: Array2<f64> = Array2::from_shape_fn((batch.len(), 4), |_| rng.gen_range(-1.0..1.0));
    for mut row in emb.rows_mut() {
        let n = row.dot(&row).sqrt();
        row /= n;
    }
    let triplets = mine_semi_hard(emb.view(), &batch.clip_ids())?;
    println!("batch clips {:?}: {} mined triplets", batch.clip_ids(), triplets.len());
    for t in triplets.iter().take(4) {
        println!("  {t:?}");
    }
    Ok(())
}
