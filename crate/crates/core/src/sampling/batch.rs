use rand::seq::index;
use rand::Rng;

use super::triplets::WindowRef;
use crate::dsp::WindowSequence;
use crate::error::{Error, Result};

/// `P * K` windows tagged by source clip, grouped clip by clip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub items: Vec<WindowRef>,
}

impl Batch {
    pub fn clip_ids(&self) -> Vec<usize> {
        self.items.iter().map(|r| r.clip).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Picks `clips_per_batch` distinct clips, then `windows_per_clip` windows from each
/// (without replacement when the clip is long enough, with replacement otherwise).
pub fn assemble_batch<R: Rng>(
    clips: &[WindowSequence],
    clips_per_batch: usize,
    windows_per_clip: usize,
    rng: &mut R,
) -> Result<Batch> {
    let lengths: Vec<usize> = clips.iter().map(WindowSequence::len).collect();
    assemble_batch_from_lengths(&lengths, clips_per_batch, windows_per_clip, rng)
}

pub fn assemble_batch_from_lengths<R: Rng>(
    lengths: &[usize],
    clips_per_batch: usize,
    windows_per_clip: usize,
    rng: &mut R,
) -> Result<Batch> {
    if clips_per_batch == 0 || windows_per_clip == 0 {
        return Err(Error::invalid("batch needs at least one clip and one window per clip"));
    }
    let eligible: Vec<usize> = (0..lengths.len()).filter(|&c| lengths[c] > 0).collect();
    if eligible.len() < clips_per_batch {
        return Err(Error::invalid(format!(
            "batch needs {clips_per_batch} clips with windows, only {} available",
            eligible.len()
        )));
    }
    let mut items = Vec::with_capacity(clips_per_batch * windows_per_clip);
    for pick in index::sample(rng, eligible.len(), clips_per_batch) {
        let clip = eligible[pick];
        let len = lengths[clip];
        if len >= windows_per_clip {
            for i in index::sample(rng, len, windows_per_clip) {
                items.push(WindowRef { clip, index: i });
            }
        } else {
            for _ in 0..windows_per_clip {
                items.push(WindowRef {
                    clip,
                    index: rng.gen_range(0..len),
                });
            }
        }
    }
    Ok(Batch { items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::{BTreeSet, HashSet};

    #[test]
    fn four_by_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = assemble_batch_from_lengths(&[10, 10, 10, 10, 10, 10], 4, 4, &mut rng).unwrap();
        assert_eq!(b.len(), 16);
        let clips: BTreeSet<usize> = b.clip_ids().into_iter().collect();
        assert_eq!(clips.len(), 4);
        let distinct: HashSet<_> = b.items.iter().collect();
        assert_eq!(distinct.len(), 16);
    }

    #[test]
    fn short_clip_repeats_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = assemble_batch_from_lengths(&[2, 2], 2, 4, &mut rng).unwrap();
        for clip in 0..2 {
            let picked: Vec<usize> = b.items.iter().filter(|r| r.clip == clip).map(|r| r.index).collect();
            assert_eq!(picked.len(), 4);
            let unique: HashSet<_> = picked.iter().collect();
            assert!(unique.len() < picked.len());
        }
    }

    #[test]
    fn same_seed_same_batch() {
        let lens = [3, 7, 0, 9, 4, 4, 12];
        let a = assemble_batch_from_lengths(&lens, 3, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = assemble_batch_from_lengths(&lens, 3, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.items.iter().all(|r| r.clip != 2));
    }

    #[test]
    fn too_few_eligible_clips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(assemble_batch_from_lengths(&[5, 0, 5], 3, 2, &mut rng).is_err());
    }
}
