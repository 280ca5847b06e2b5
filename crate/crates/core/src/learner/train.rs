//! Mini-batch training with early stopping.

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::adam::{adam_step, AdamParams, AdamState};
use crate::learner::model::Model;

/// Training hyperparameters. Defaults: Adam at its published settings,
/// at most 5 epochs, early stopping on epoch-mean training loss with
/// patience 1 and min_delta 1e-4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamParams::default();
        Self {
            learning_rate: adam.learning_rate,
            max_epochs: 5,
            batch_size: 32,
            patience: 1,
            min_delta: 1e-4,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::ConfigInvalid("max_epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::ConfigInvalid("batch_size must be >= 1".into()));
        }
        if !(self.min_delta >= 0.0) {
            return Err(Error::ConfigInvalid("min_delta must be >= 0".into()));
        }
        self.adam_params().validate()
    }

    pub fn adam_params(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// A trained model plus what the report wants to know about the run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub epochs_run: usize,
    pub final_loss: f64,
}

/// Train on one shard. Pure in `(model, shard, cfg, seed)`: the mini-batch
/// order is drawn from a ChaCha8 stream over `seed` and nothing else.
///
/// Stops before `max_epochs` once the epoch-mean training loss has failed to
/// improve by `min_delta` for `patience` consecutive epochs.
pub fn train(mut model: Model, shard: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    if shard.n_examples() == 0 {
        return Err(Error::EmptyShard);
    }
    if shard.n_features() != model.n_features() {
        return Err(Error::ShapeMismatch(format!(
            "shard has {} features, model expects {}",
            shard.n_features(),
            model.n_features()
        )));
    }
    let mut local_targets = Vec::with_capacity(shard.n_examples());
    for &l in shard.labels() {
        match model.label_cols().iter().position(|&c| c == l) {
            Some(p) => local_targets.push(p),
            None => return Err(Error::LabelOutsideCols(format!("label index {l}"))),
        }
    }

    let n = shard.n_examples();
    let hyper = cfg.adam_params();
    let mut adam = AdamState::new(model.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut best = f64::INFINITY;
    let mut stale = 0usize;
    let mut epochs_run = 0usize;
    let mut final_loss = f64::INFINITY;

    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let x = shard.features().select(Axis(0), batch);
            let t: Vec<usize> = batch.iter().map(|&r| local_targets[r]).collect();
            let (loss, grads) = model.batch_loss_and_grads(&x, &t);
            adam_step(model.params_mut(), &grads, &mut adam, &hyper)?;
            loss_sum += loss * batch.len() as f64;
        }
        let epoch_loss = loss_sum / n as f64;
        epochs_run += 1;
        final_loss = epoch_loss;
        if epoch_loss < best - cfg.min_delta {
            best = epoch_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model,
        epochs_run,
        final_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::arch::ArchSpec;
    use crate::learner::model::{init_model, predict_scores};
    use crate::score::argmax_label;
    use ndarray::Array2;

    /// Linearly separable 2-class toy set: class 0 around (-2, -2), class 1
    /// around (+2, +2), separated by the x+y=0 hyperplane.
    fn separable_shard() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for k in 0..10 {
            let dx = 0.06 * k as f64;
            let dy = 0.04 * (9 - k) as f64;
            rows.push([-2.0 + dx, -2.0 + dy]);
            labels.push(0);
            rows.push([2.0 - dx, 2.0 - dy]);
            labels.push(1);
        }
        let n = rows.len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Dataset::new(Array2::from_shape_vec((n, 2), flat).unwrap(), labels, 2).unwrap()
    }

    /// Independent separability oracle: one perceptron pass per epoch; on a
    /// separable set it converges to zero mistakes.
    fn perceptron_separates(ds: &Dataset) -> bool {
        let mut w = [0.0f64; 3];
        for _ in 0..100 {
            let mut mistakes = 0;
            for (row, &label) in ds.features().rows().into_iter().zip(ds.labels()) {
                let y = if label == 1 { 1.0 } else { -1.0 };
                let s = w[0] * row[0] + w[1] * row[1] + w[2];
                if y * s <= 0.0 {
                    w[0] += y * row[0];
                    w[1] += y * row[1];
                    w[2] += y;
                    mistakes += 1;
                }
            }
            if mistakes == 0 {
                return true;
            }
        }
        false
    }

    #[test]
    fn early_stopping_never_exceeds_max_epochs() {
        let shard = separable_shard();
        for seed in 0..6u64 {
            let model = init_model(&ArchSpec::softmax_regression(), 2, &[0, 1], seed).unwrap();
            let cfg = TrainConfig {
                max_epochs: 5,
                ..TrainConfig::default()
            };
            let out = train(model, &shard, &cfg, seed).unwrap();
            assert!(out.epochs_run <= 5);
            assert!(out.epochs_run >= 1);
            assert!(out.final_loss.is_finite());
        }
    }

    #[test]
    fn softmax_regression_fits_a_separable_toy_shard() {
        let shard = separable_shard();
        assert!(
            perceptron_separates(&shard),
            "oracle says the toy shard is not separable"
        );
        let model = init_model(&ArchSpec::softmax_regression(), 2, &[0, 1], 3).unwrap();
        // 20 points at batch 4 gives 25 Adam steps over 5 epochs.
        let cfg = TrainConfig {
            learning_rate: 0.3,
            batch_size: 4,
            min_delta: 0.0,
            patience: 5,
            ..TrainConfig::default()
        };
        let initial_loss = {
            let targets: Vec<usize> = shard.labels().to_vec();
            model.batch_loss(shard.features(), &targets)
        };
        let out = train(model, &shard, &cfg, 3).unwrap();
        assert!(out.epochs_run <= 5);
        assert!(out.final_loss < initial_loss, "loss did not decrease");
        let scores = predict_scores(&out.model, &shard).unwrap();
        let correct = (0..shard.n_examples())
            .filter(|&r| {
                argmax_label(scores.row(r), scores.cols()).unwrap() == shard.labels()[r]
            })
            .count();
        assert_eq!(correct, shard.n_examples(), "training accuracy below 1.0");
    }

    #[test]
    fn training_is_pure_in_its_inputs() {
        let shard = separable_shard();
        let model = init_model(&ArchSpec::new(vec![(4, crate::learner::arch::Activation::Relu)]), 2, &[0, 1], 7).unwrap();
        let cfg = TrainConfig::default();
        let a = train(model.clone(), &shard, &cfg, 11).unwrap();
        let b = train(model.clone(), &shard, &cfg, 11).unwrap();
        assert_eq!(a.model.params(), b.model.params());
        assert_eq!(a.epochs_run, b.epochs_run);
        let c = train(model, &shard, &cfg, 12).unwrap();
        assert_ne!(a.model.params(), c.model.params());
    }

    #[test]
    fn foreign_labels_and_empty_shards_are_rejected() {
        let shard = separable_shard();
        let model = init_model(&ArchSpec::softmax_regression(), 2, &[0], 0).unwrap();
        assert!(matches!(
            train(model, &shard, &TrainConfig::default(), 0),
            Err(Error::LabelOutsideCols(_))
        ));

        let empty = Dataset::new(Array2::zeros((0, 2)), vec![], 2).unwrap();
        let model = init_model(&ArchSpec::softmax_regression(), 2, &[0, 1], 0).unwrap();
        assert!(matches!(
            train(model, &empty, &TrainConfig::default(), 0),
            Err(Error::EmptyShard)
        ));
    }
}
