//! Deterministic desk-scale simulator of federated learning with
//! heterogeneous labels and heterogeneous client models.
//!
//! Clients never share weights. Each iteration every client trains its own
//! architecture on a private non-IID shard, scores the shared public
//! dataset, blends those scores with the previous consensus
//! (`restrict(global, l_m) + alpha * fresh`, alpha = shard/public size
//! ratio), and the coordinator folds the updated score columns label-wise
//! into the next consensus, weighting claimants of shared labels by their
//! public-set accuracy (beta). The public set doubles as the test set for
//! the local-vs-global accuracy curves.

pub mod data;
pub mod dataset;
pub mod error;
pub mod label;
pub mod learner;
pub mod payload;
pub mod protocol;
pub mod score;
pub mod seed;
pub mod sim;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use label::LabelSpace;
pub use score::{argmax_label, GlobalScoreState, ScoreMatrix};
