//! Feature-vector datasets.

use ndarray::Array2;

use crate::error::{Error, Result};

/// An immutable dataset: a real feature matrix plus one label index per row.
///
/// Holds both the shared public set and the per-iteration private shards.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    /// `n_labels` is the size of the experiment's label space; every label
    /// index must lie below it.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, n_labels: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows vs {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_labels) {
            return Err(Error::ShapeMismatch(format!(
                "label index {bad} out of range for {n_labels} labels"
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn n_examples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Rebuild with transformed features; row count and width must not change.
    pub(crate) fn map_features(mut self, f: impl FnOnce(&mut Array2<f64>)) -> Self {
        let shape = (self.features.nrows(), self.features.ncols());
        f(&mut self.features);
        assert_eq!(
            (self.features.nrows(), self.features.ncols()),
            shape,
            "map_features must preserve shape"
        );
        self
    }

    /// Row count per label index, over `n_labels` bins.
    pub fn label_histogram(&self, n_labels: usize) -> Vec<usize> {
        let mut hist = vec![0usize; n_labels];
        for &l in &self.labels {
            hist[l] += 1;
        }
        hist
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn validates_shapes_and_label_range() {
        let f = array![[1.0, 2.0], [3.0, 4.0]];
        assert!(Dataset::new(f.clone(), vec![0, 1], 2).is_ok());
        assert!(Dataset::new(f.clone(), vec![0], 2).is_err());
        assert!(Dataset::new(f, vec![0, 2], 2).is_err());
    }

    #[test]
    fn histogram_counts_rows() {
        let f = Array2::zeros((4, 3));
        let ds = Dataset::new(f, vec![0, 2, 2, 1], 3).unwrap();
        assert_eq!(ds.label_histogram(3), vec![1, 1, 2]);
    }
}
