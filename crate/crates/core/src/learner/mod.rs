//! Pluggable local learners: the reference MLP family with cross-entropy
//! loss, Adam and early stopping.

mod adam;
mod arch;
mod model;
mod train;

pub use adam::{adam_step, AdamParams, AdamState};
pub use arch::{Activation, ArchSpec, LayerSpec};
pub use model::{cross_entropy, init_model, predict_scores, Model, LOSS_PROB_FLOOR};
pub use train::{train, TrainConfig, TrainOutcome};
