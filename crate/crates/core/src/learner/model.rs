//! Feed-forward models over a flat parameter vector.

use std::ops::Range;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::arch::{Activation, ArchSpec};
use crate::score::ScoreMatrix;

/// Probabilities below this floor are clamped before taking logs.
pub const LOSS_PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
struct LayerLayout {
    fan_in: usize,
    fan_out: usize,
    weights: Range<usize>,
    biases: Range<usize>,
    /// `None` marks the output layer; its linear scores feed the final
    /// row-wise softmax.
    activation: Option<Activation>,
}

/// An MLP bound to a client's label subset. Parameters live in one flat
/// vector with a per-layer layout, immutable outside training.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: ArchSpec,
    n_features: usize,
    label_cols: Vec<usize>,
    params: Vec<f64>,
    layers: Vec<LayerLayout>,
}

/// Build a model with Glorot-uniform weights (`±sqrt(6/(fan_in+fan_out))`)
/// and zero biases, fully determined by `seed`.
pub fn init_model(
    arch: &ArchSpec,
    n_features: usize,
    label_cols: &[usize],
    seed: u64,
) -> Result<Model> {
    arch.validate()?;
    if n_features == 0 {
        return Err(Error::InvalidArch("n_features must be >= 1".into()));
    }
    if label_cols.is_empty() {
        return Err(Error::InvalidArch("label_cols must be non-empty".into()));
    }
    if !label_cols.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArch(format!(
            "label_cols {label_cols:?} must be strictly increasing"
        )));
    }

    let mut layers = Vec::with_capacity(arch.hidden.len() + 1);
    let mut at = 0usize;
    let mut fan_in = n_features;
    for layer in &arch.hidden {
        let fan_out = layer.units;
        let weights = at..at + fan_in * fan_out;
        let biases = weights.end..weights.end + fan_out;
        at = biases.end;
        layers.push(LayerLayout {
            fan_in,
            fan_out,
            weights,
            biases,
            activation: Some(layer.activation),
        });
        fan_in = fan_out;
    }
    let fan_out = label_cols.len();
    let weights = at..at + fan_in * fan_out;
    let biases = weights.end..weights.end + fan_out;
    at = biases.end;
    layers.push(LayerLayout {
        fan_in,
        fan_out,
        weights,
        biases,
        activation: None,
    });

    let mut params = vec![0.0; at];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &layers {
        let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
        for w in &mut params[layer.weights.clone()] {
            *w = rng.random_range(-limit..limit);
        }
        // biases stay zero
    }

    Ok(Model {
        arch: arch.clone(),
        n_features,
        label_cols: label_cols.to_vec(),
        params,
        layers,
    })
}

impl Model {
    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// The client's label subset, as label-space indices.
    pub fn label_cols(&self) -> &[usize] {
        &self.label_cols
    }

    pub fn n_outputs(&self) -> usize {
        self.label_cols.len()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weight_view(&self, layer: &LayerLayout) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape(
            (layer.fan_in, layer.fan_out),
            &self.params[layer.weights.clone()],
        )
        .expect("layout ranges are consistent")
    }

    fn bias(&self, layer: &LayerLayout) -> &[f64] {
        &self.params[layer.biases.clone()]
    }

    /// Forward pass keeping every post-activation; `out[0]` is the input,
    /// `out.last()` the softmax probabilities.
    fn forward_trace(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &self.layers {
            let mut z = acts.last().unwrap().dot(&self.weight_view(layer));
            let b = self.bias(layer);
            for mut row in z.rows_mut() {
                for (v, &bv) in row.iter_mut().zip(b) {
                    *v += bv;
                }
            }
            let a = match layer.activation {
                Some(Activation::Relu) => z.mapv_into(|v| v.max(0.0)),
                Some(Activation::Sigmoid) => z.mapv_into(|v| 1.0 / (1.0 + (-v).exp())),
                Some(Activation::Softmax) | None => softmax_rows(z),
            };
            acts.push(a);
        }
        acts
    }

    /// Softmax probabilities for a feature matrix.
    pub fn forward_probs(&self, x: &Array2<f64>) -> Array2<f64> {
        self.forward_trace(x).pop().expect("at least the input")
    }

    /// Mean cross-entropy of the batch against local target positions
    /// (indices into this model's output columns).
    pub fn batch_loss(&self, x: &Array2<f64>, local_targets: &[usize]) -> f64 {
        let probs = self.forward_probs(x);
        mean_nll(&probs, local_targets)
    }

    /// Loss plus analytic gradients with respect to every parameter, laid
    /// out exactly like [`params`](Self::params).
    pub fn batch_loss_and_grads(
        &self,
        x: &Array2<f64>,
        local_targets: &[usize],
    ) -> (f64, Vec<f64>) {
        let acts = self.forward_trace(x);
        let probs = acts.last().unwrap();
        let loss = mean_nll(probs, local_targets);
        let batch = x.nrows() as f64;

        // Fused softmax + cross-entropy gradient at the output.
        let mut d_z = probs.clone();
        for (r, &t) in local_targets.iter().enumerate() {
            d_z[(r, t)] -= 1.0;
        }
        d_z.mapv_inplace(|v| v / batch);

        let mut grads = vec![0.0; self.params.len()];
        for (j, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[j];
            let d_w = input.t().dot(&d_z);
            // dot() on a transposed view may hand back a column-major
            // result; iterate logically instead of slicing memory.
            for (dst, src) in grads[layer.weights.clone()].iter_mut().zip(d_w.iter()) {
                *dst = *src;
            }
            let d_b = d_z.sum_axis(Axis(0));
            for (dst, src) in grads[layer.biases.clone()].iter_mut().zip(d_b.iter()) {
                *dst = *src;
            }
            if j == 0 {
                break;
            }
            let d_a = d_z.dot(&self.weight_view(layer).t());
            let post = &acts[j];
            d_z = match self.layers[j - 1].activation.expect("hidden layer") {
                Activation::Relu => {
                    let mut d = d_a;
                    d.zip_mut_with(post, |g, &a| {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    });
                    d
                }
                Activation::Sigmoid => {
                    let mut d = d_a;
                    d.zip_mut_with(post, |g, &a| *g *= a * (1.0 - a));
                    d
                }
                Activation::Softmax => {
                    let mut d = d_a;
                    for (mut g_row, a_row) in d.rows_mut().into_iter().zip(post.rows()) {
                        let dot: f64 = g_row.iter().zip(a_row.iter()).map(|(g, a)| g * a).sum();
                        for (g, &a) in g_row.iter_mut().zip(a_row.iter()) {
                            *g = a * (*g - dot);
                        }
                    }
                    d
                }
            };
        }
        (loss, grads)
    }
}

fn softmax_rows(mut z: Array2<f64>) -> Array2<f64> {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    z
}

fn mean_nll(probs: &Array2<f64>, local_targets: &[usize]) -> f64 {
    let n = local_targets.len().max(1) as f64;
    local_targets
        .iter()
        .enumerate()
        .map(|(r, &t)| -probs[(r, t)].max(LOSS_PROB_FLOOR).ln())
        .sum::<f64>()
        / n
}

/// Score a dataset: fresh, row-stochastic scores over the model's label
/// subset.
pub fn predict_scores(model: &Model, dataset: &Dataset) -> Result<ScoreMatrix> {
    if dataset.n_features() != model.n_features {
        return Err(Error::ShapeMismatch(format!(
            "dataset has {} features, model expects {}",
            dataset.n_features(),
            model.n_features
        )));
    }
    let probs = model.forward_probs(dataset.features());
    ScoreMatrix::new(model.label_cols.clone(), probs)
}

/// Mean categorical cross-entropy of fresh scores against true labels
/// (label-space indices, which must all appear among the score columns).
pub fn cross_entropy(scores: &ScoreMatrix, labels: &[usize]) -> Result<f64> {
    if scores.rows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} score rows vs {} labels",
            scores.rows(),
            labels.len()
        )));
    }
    let mut local = Vec::with_capacity(labels.len());
    for &l in labels {
        match scores.col_position(l) {
            Some(p) => local.push(p),
            None => return Err(Error::LabelOutsideCols(format!("label index {l}"))),
        }
    }
    Ok(mean_nll(scores.values(), &local))
}
