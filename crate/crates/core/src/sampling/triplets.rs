use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::WindowSequence;
use crate::error::{Error, Result};

/// A window addressed by clip position (in the clip list) and window index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowRef {
    pub clip: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub anchor: WindowRef,
    pub positive: WindowRef,
    pub negative: WindowRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Positive within `tau` of the anchor; negative beyond `tau` or from another clip.
    Temporal,
    /// Positive from the anchor's clip, negative from a different clip.
    Clip,
}

impl FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "temporal" => Ok(SamplingMode::Temporal),
            "clip" => Ok(SamplingMode::Clip),
            other => Err(Error::invalid(format!("unknown sampling mode {other:?} (temporal|clip)"))),
        }
    }
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::Temporal => "temporal",
            SamplingMode::Clip => "clip",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub mode: SamplingMode,
    pub tau_s: f64,
    pub triplets_per_clip: usize,
    pub rng_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            mode: SamplingMode::Clip,
            tau_s: 10.0,
            triplets_per_clip: 16,
            rng_seed: 7,
        }
    }
}

/// `tau_s / window_hop_s` rounded half-up, at least 1.
pub fn tau_windows(tau_s: f64, window_hop_s: f64) -> usize {
    ((tau_s / window_hop_s + 0.5).floor() as usize).max(1)
}

/// Uniform sampler over valid triplets for fixed clip lengths.
#[derive(Debug, Clone)]
pub struct TripletSampler {
    lengths: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
    mode: SamplingMode,
    tau_w: usize,
    anchors: Vec<WindowRef>,
    rng: ChaCha8Rng,
}

impl TripletSampler {
    pub fn new(clips: &[WindowSequence], cfg: &SamplerConfig) -> Result<Self> {
        let hop = clips
            .iter()
            .find(|c| !c.is_empty())
            .map(|c| c.window_hop_s)
            .ok_or_else(|| Error::invalid("no clip has any window"))?;
        if clips.iter().any(|c| !c.is_empty() && (c.window_hop_s - hop).abs() > 1e-9) {
            return Err(Error::invalid("clips disagree on window hop"));
        }
        let lengths: Vec<usize> = clips.iter().map(WindowSequence::len).collect();
        Self::from_lengths(&lengths, hop, cfg)
    }

    pub fn from_lengths(lengths: &[usize], window_hop_s: f64, cfg: &SamplerConfig) -> Result<Self> {
        if !(cfg.tau_s > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", cfg.tau_s)));
        }
        if !(window_hop_s > 0.0) {
            return Err(Error::invalid("window hop must be positive"));
        }
        let tau_w = tau_windows(cfg.tau_s, window_hop_s);
        let mut offsets = Vec::with_capacity(lengths.len());
        let mut total = 0;
        for &len in lengths {
            offsets.push(total);
            total += len;
        }
        let nonempty = lengths.iter().filter(|&&l| l > 0).count();
        if nonempty == 0 {
            return Err(Error::invalid("no clip has any window"));
        }
        if cfg.mode == SamplingMode::Clip && nonempty < 2 {
            return Err(Error::invalid("clip mode needs at least 2 clips with windows"));
        }
        let mut anchors = Vec::new();
        for (clip, &len) in lengths.iter().enumerate() {
            let others = total - len > 0;
            for index in 0..len {
                let ok = match cfg.mode {
                    SamplingMode::Clip => len >= 2 && others,
                    SamplingMode::Temporal => len >= 2 && (others || far_count(index, len, tau_w) > 0),
                };
                if ok {
                    anchors.push(WindowRef { clip, index });
                }
            }
        }
        if anchors.is_empty() {
            return Err(Error::invalid(match cfg.mode {
                SamplingMode::Clip => "clip mode needs a clip with at least 2 windows".to_string(),
                SamplingMode::Temporal => format!(
                    "no anchor admits a positive within {tau_w} windows and a negative beyond it \
                     (a single clip needs at least {} windows)",
                    tau_w + 2
                ),
            }));
        }
        Ok(Self {
            lengths: lengths.to_vec(),
            offsets,
            total,
            mode: cfg.mode,
            tau_w,
            anchors,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        })
    }

    pub fn tau_w(&self) -> usize {
        self.tau_w
    }

    /// Anchors that admit at least one valid triplet.
    pub fn anchors(&self) -> &[WindowRef] {
        &self.anchors
    }

    pub fn sample(&mut self) -> Triplet {
        let anchor = self.anchors[self.rng.gen_range(0..self.anchors.len())];
        self.sample_for(anchor)
    }

    /// Draws positive and negative for a given (eligible) anchor.
    pub fn sample_for(&mut self, anchor: WindowRef) -> Triplet {
        let len = self.lengths[anchor.clip];
        let i = anchor.index;
        let positive = match self.mode {
            SamplingMode::Clip => {
                let r = self.rng.gen_range(0..len - 1);
                if r >= i {
                    r + 1
                } else {
                    r
                }
            }
            SamplingMode::Temporal => {
                let lo = i.saturating_sub(self.tau_w);
                let hi = (i + self.tau_w).min(len - 1);
                let r = lo + self.rng.gen_range(0..hi - lo);
                if r >= i {
                    r + 1
                } else {
                    r
                }
            }
        };
        let far = far_count(i, len, self.tau_w);
        let others = self.total - len;
        let same_clip_negative = match self.mode {
            SamplingMode::Clip => false,
            SamplingMode::Temporal => match (far > 0, others > 0) {
                (true, true) => self.rng.gen_bool(0.5),
                (same, _) => same,
            },
        };
        let negative = if same_clip_negative {
            let below = i.saturating_sub(self.tau_w);
            let r = self.rng.gen_range(0..far);
            let k = if r < below { r } else { i + self.tau_w + 1 + (r - below) };
            WindowRef {
                clip: anchor.clip,
                index: k,
            }
        } else {
            self.other_clip_window(anchor.clip)
        };
        Triplet {
            anchor,
            positive: WindowRef {
                clip: anchor.clip,
                index: positive,
            },
            negative,
        }
    }

    fn other_clip_window(&mut self, clip: usize) -> WindowRef {
        let skip_start = self.offsets[clip];
        let skip_len = self.lengths[clip];
        let mut flat = self.rng.gen_range(0..self.total - skip_len);
        if flat >= skip_start {
            flat += skip_len;
        }
        // empty clips share their successor's offset, so the last match is non-empty
        let c = self.offsets.partition_point(|&o| o <= flat) - 1;
        WindowRef {
            clip: c,
            index: flat - self.offsets[c],
        }
    }
}

/// Windows `k` in a clip of `len` with `|i - k| > tau_w`.
fn far_count(i: usize, len: usize, tau_w: usize) -> usize {
    let below = i.saturating_sub(tau_w);
    let above = len.saturating_sub(i + tau_w + 1);
    below + above
}

/// `triplets_per_clip` triplets per clip that has windows, with uniformly drawn anchors.
pub fn sample_triplets(clips: &[WindowSequence], cfg: &SamplerConfig) -> Result<Vec<Triplet>> {
    let mut sampler = TripletSampler::new(clips, cfg)?;
    let n = clips.iter().filter(|c| !c.is_empty()).count() * cfg.triplets_per_clip;
    Ok((0..n).map(|_| sampler.sample()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn clips(lengths: &[usize]) -> Vec<WindowSequence> {
        lengths
            .iter()
            .enumerate()
            .map(|(c, &n)| WindowSequence {
                windows: vec![Array2::zeros((2, 2)); n],
                window_hop_s: 0.48,
                clip_id: format!("c{c}"),
                too_short: n == 0,
            })
            .collect()
    }

    fn cfg(mode: SamplingMode, tau_s: f64) -> SamplerConfig {
        SamplerConfig {
            mode,
            tau_s,
            triplets_per_clip: 10,
            rng_seed: 3,
        }
    }

    #[test]
    fn tau_rounds_half_up_with_floor_of_one() {
        assert_eq!(tau_windows(10.0, 0.48), 21);
        assert_eq!(tau_windows(0.72, 0.48), 2);
        assert_eq!(tau_windows(0.71, 0.48), 1);
        assert_eq!(tau_windows(0.01, 0.48), 1);
    }

    #[test]
    fn clip_mode_same_positive_other_negative() {
        // two 10 s clips at 0.48 s window hop
        let cs = clips(&[19, 19]);
        let ts = sample_triplets(&cs, &cfg(SamplingMode::Clip, 10.0)).unwrap();
        assert_eq!(ts.len(), 20);
        for t in ts {
            assert_eq!(t.anchor.clip, t.positive.clip);
            assert_ne!(t.anchor.clip, t.negative.clip);
            assert_ne!(t.anchor.index, t.positive.index);
        }
    }

    #[test]
    fn three_window_clip_has_one_valid_pair_for_first_anchor() {
        let cs = clips(&[3]);
        let mut s = TripletSampler::new(&cs, &cfg(SamplingMode::Temporal, 0.48)).unwrap();
        assert_eq!(s.tau_w(), 1);
        // brute-force enumeration of valid (j, k) for anchor 0
        let valid: Vec<(usize, usize)> = (0usize..3)
            .flat_map(|j| (0usize..3).map(move |k| (j, k)))
            .filter(|&(j, k)| j != 0 && j.abs_diff(0usize) <= 1 && k.abs_diff(0usize) > 1)
            .collect();
        assert_eq!(valid, vec![(1, 2)]);
        for _ in 0..200 {
            let t = s.sample_for(WindowRef { clip: 0, index: 0 });
            assert_eq!((t.positive.index, t.negative.index), valid[0]);
        }
        // the middle window has no far negative, so it is not an anchor
        assert!(!s.anchors().contains(&WindowRef { clip: 0, index: 1 }));
    }

    #[test]
    fn rejects_impossible_configurations() {
        assert!(sample_triplets(&clips(&[5]), &cfg(SamplingMode::Clip, 10.0)).is_err());
        let e = sample_triplets(&clips(&[3]), &cfg(SamplingMode::Temporal, 2.0)).unwrap_err();
        assert!(e.to_string().contains("windows"), "{e}");
        assert!(sample_triplets(&clips(&[0, 0]), &cfg(SamplingMode::Temporal, 1.0)).is_err());
        assert!(sample_triplets(&clips(&[4, 4]), &cfg(SamplingMode::Temporal, 0.0)).is_err());
    }

    #[test]
    fn positives_are_uniform_for_fixed_anchor() {
        let cs = clips(&[30, 12]);
        let mut s = TripletSampler::new(&cs, &cfg(SamplingMode::Temporal, 1.9)).unwrap();
        let anchor = WindowRef { clip: 0, index: 10 };
        let tau = s.tau_w();
        let draws = 100_000;
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(s.sample_for(anchor).positive.index).or_default() += 1;
        }
        let valid: Vec<usize> = (10 - tau..=10 + tau).filter(|&j| j != 10).collect();
        assert_eq!(counts.len(), valid.len());
        let p = 1.0 / valid.len() as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for j in valid {
            let c = counts[&j] as f64;
            assert!((c - draws as f64 * p).abs() <= 3.0 * sigma, "j={j} count={c}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cs = clips(&[6, 9, 4]);
        let a = sample_triplets(&cs, &cfg(SamplingMode::Temporal, 1.0)).unwrap();
        let b = sample_triplets(&cs, &cfg(SamplingMode::Temporal, 1.0)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn temporal_triplets_respect_tau(
            lengths in proptest::collection::vec(0usize..15, 1..6),
            tau_s in 0.2f64..3.0,
            seed in any::<u64>(),
        ) {
            let cs = clips(&lengths);
            let c = SamplerConfig { mode: SamplingMode::Temporal, tau_s, triplets_per_clip: 20, rng_seed: seed };
            let Ok(mut s) = TripletSampler::new(&cs, &c) else { return Ok(()); };
            let tau = s.tau_w();
            for _ in 0..200 {
                let t = s.sample();
                prop_assert_eq!(t.anchor.clip, t.positive.clip);
                prop_assert!(t.anchor.index.abs_diff(t.positive.index) <= tau);
                prop_assert!(t.anchor.index != t.positive.index);
                prop_assert!(t.negative.index < lengths[t.negative.clip]);
                if t.negative.clip == t.anchor.clip {
                    prop_assert!(t.anchor.index.abs_diff(t.negative.index) > tau);
                }
            }
        }

        #[test]
        fn clip_triplets_cross_clips(lengths in proptest::collection::vec(0usize..8, 2..6), seed in any::<u64>()) {
            let cs = clips(&lengths);
            let c = SamplerConfig { mode: SamplingMode::Clip, tau_s: 10.0, triplets_per_clip: 20, rng_seed: seed };
            let Ok(mut s) = TripletSampler::new(&cs, &c) else { return Ok(()); };
            for _ in 0..200 {
                let t = s.sample();
                prop_assert_eq!(t.anchor.clip, t.positive.clip);
                prop_assert!(t.negative.clip != t.anchor.clip);
                prop_assert!(t.negative.index < lengths[t.negative.clip]);
            }
        }
    }
}
