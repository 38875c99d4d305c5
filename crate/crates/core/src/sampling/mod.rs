//! Temporal-proximity self-supervision: triplet sampling, batch assembly and
//! within-batch semi-hard negative mining.

pub mod batch;
pub mod mining;
pub mod triplets;

pub use batch::{assemble_batch, assemble_batch_from_lengths, Batch};
pub use mining::{mine_semi_hard, mine_semi_hard_with, IndexTriplet, PairRelation};
pub use triplets::{sample_triplets, tau_windows, SamplerConfig, SamplingMode, Triplet, TripletSampler, WindowRef};
