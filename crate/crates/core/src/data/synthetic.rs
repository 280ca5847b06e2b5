//! Synthetic per-label Gaussian pools.

use ndarray::Array2;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::label::LabelSpace;
use crate::seed::{rng_for, stream};

/// Diagonal Gaussian for one label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGaussian {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub pool_size: usize,
}

/// Generator spec for a synthetic dataset: one Gaussian per label, aligned
/// with label-space order.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_features: usize,
    pub per_label: Vec<LabelGaussian>,
}

impl SyntheticSpec {
    pub fn validate(&self, label_space: &LabelSpace) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::InvalidSpec("n_features must be >= 1".into()));
        }
        if self.per_label.len() != label_space.len() {
            return Err(Error::InvalidSpec(format!(
                "{} label entries vs {} labels in the label space",
                self.per_label.len(),
                label_space.len()
            )));
        }
        for (k, g) in self.per_label.iter().enumerate() {
            let name = label_space.name(k);
            if g.pool_size == 0 {
                return Err(Error::InvalidSpec(format!("label {name:?}: pool_size must be >= 1")));
            }
            if g.mean.len() != self.n_features || g.std.len() != self.n_features {
                return Err(Error::InvalidSpec(format!(
                    "label {name:?}: mean/std length must equal n_features={}",
                    self.n_features
                )));
            }
            if !g.mean.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidSpec(format!("label {name:?}: non-finite mean")));
            }
            if !g.std.iter().all(|v| v.is_finite() && *v > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "label {name:?}: standard deviations must be finite and > 0"
                )));
            }
        }
        Ok(())
    }
}

/// Per-label row pools drawn from a [`SyntheticSpec`], plus their flattened
/// dataset view. All pools share one feature width.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPools {
    pub n_features: usize,
    pub per_label: Vec<Array2<f64>>,
}

impl LabelPools {
    /// Flatten into one dataset: label blocks in label-space order, rows in
    /// pool order.
    pub fn to_dataset(&self, label_space: &LabelSpace) -> Result<Dataset> {
        let total: usize = self.per_label.iter().map(|p| p.nrows()).sum();
        let mut features = Array2::zeros((total, self.n_features));
        let mut labels = Vec::with_capacity(total);
        let mut at = 0usize;
        for (k, pool) in self.per_label.iter().enumerate() {
            for row in pool.rows() {
                features.row_mut(at).assign(&row);
                labels.push(k);
                at += 1;
            }
        }
        Dataset::new(features, labels, label_space.len())
    }

    /// Split a dataset back into per-label pools (used for CSV-backed pools).
    pub fn from_dataset(dataset: &Dataset, label_space: &LabelSpace) -> Self {
        let mut per_label = Vec::with_capacity(label_space.len());
        for k in 0..label_space.len() {
            let rows: Vec<usize> = dataset
                .labels()
                .iter()
                .enumerate()
                .filter_map(|(i, &l)| (l == k).then_some(i))
                .collect();
            per_label.push(dataset.features().select(ndarray::Axis(0), &rows));
        }
        Self {
            n_features: dataset.n_features(),
            per_label,
        }
    }
}

/// Draw `pool_size` rows per label from the spec's Gaussians.
///
/// Each label gets its own derived substream, so pools are fully determined
/// by `(spec, seed)` regardless of evaluation order. `stream_tag`
/// distinguishes independent uses of one spec (public set vs private pools).
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    label_space: &LabelSpace,
    seed: u64,
    stream_tag: u64,
) -> Result<LabelPools> {
    spec.validate(label_space)?;
    let mut per_label = Vec::with_capacity(spec.per_label.len());
    for (k, g) in spec.per_label.iter().enumerate() {
        let mut rng = rng_for(seed, &[stream_tag, k as u64]);
        let mut pool = Array2::zeros((g.pool_size, spec.n_features));
        for mut row in pool.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let dist = Normal::new(g.mean[j], g.std[j]).expect("validated std > 0");
                *v = dist.sample(&mut rng);
            }
        }
        per_label.push(pool);
    }
    Ok(LabelPools {
        n_features: spec.n_features,
        per_label,
    })
}

/// Convenience for specs used as a whole dataset (public set, gen-data).
pub fn generate_synthetic_dataset(
    spec: &SyntheticSpec,
    label_space: &LabelSpace,
    seed: u64,
) -> Result<Dataset> {
    generate_synthetic(spec, label_space, seed, stream::PUBLIC_DATA)?.to_dataset(label_space)
}

/// Per-feature affine transform fitted on the public set: zero mean, unit
/// variance (population). Constant features are left unscaled.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(public: &Dataset) -> Self {
        let n = public.n_examples() as f64;
        let d = public.n_features();
        let mut mean = vec![0.0; d];
        let mut scale = vec![0.0; d];
        for row in public.features().rows() {
            for (j, &v) in row.iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        for row in public.features().rows() {
            for (j, &v) in row.iter().enumerate() {
                scale[j] += (v - mean[j]).powi(2);
            }
        }
        for s in &mut scale {
            let std = (*s / n).sqrt();
            *s = if std > 0.0 { std } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub fn apply(&self, features: &mut Array2<f64>) {
        for mut row in features.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
    }

    pub fn apply_dataset(&self, dataset: Dataset) -> Dataset {
        dataset.map_features(|features| self.apply(features))
    }

    pub fn apply_pools(&self, pools: &mut LabelPools) {
        for pool in &mut pools.per_label {
            self.apply(pool);
        }
    }
}
