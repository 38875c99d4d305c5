pub mod cli;
pub mod config;
pub mod corpus;
pub mod dsp;
pub mod embedder;
pub mod error;
pub mod eval;
pub mod features;
pub mod matrix_file;
pub mod pipeline;
pub mod sampling;
pub mod training;

pub use error::{Error, Result};
