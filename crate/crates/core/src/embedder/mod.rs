//! The window embedding map: an MLP over flattened context windows with an
//! L2-normalized output, trained with a triplet hinge loss.

pub mod checkpoint;
pub mod loss;
pub mod model;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use loss::{backward, triplet_loss, Gradients, LossReport, DEFAULT_MARGIN};
pub use model::{init_model, DenseLayer, EmbeddingModel, ForwardCache, InputNorm, ModelConfig};
