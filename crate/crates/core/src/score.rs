//! Score matrices: per-example, per-label model outputs and their algebra.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::label::LabelSpace;

/// Per-example, per-label real scores of a model over a dataset.
///
/// `cols` is an ordered subset of the experiment's label space (always in
/// label-space order, never in client declaration order). Values are finite.
/// A fresh prediction matrix is additionally row-stochastic; matrices that
/// went through a local or global update carry no normalization guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    cols: Vec<usize>,
    values: Array2<f64>,
}

impl ScoreMatrix {
    pub fn new(cols: Vec<usize>, values: Array2<f64>) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::ShapeMismatch(
                "score matrix needs at least one label column".into(),
            ));
        }
        if !cols.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::ShapeMismatch(format!(
                "columns {cols:?} are not strictly increasing label indices"
            )));
        }
        if values.ncols() != cols.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} value columns vs {} labels",
                values.ncols(),
                cols.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::ShapeMismatch(
                "score matrix contains non-finite values".into(),
            ));
        }
        Ok(Self { cols, values })
    }

    /// All-zero scores over the full label space; the iteration-0 global state.
    pub fn zeros(label_space: &LabelSpace, rows: usize) -> Self {
        Self {
            cols: label_space.all_indices(),
            values: Array2::zeros((rows, label_space.len())),
        }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    /// Label-space indices of the columns, in label-space order.
    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, r: usize) -> ArrayView1<'_, f64> {
        self.values.row(r)
    }

    /// Position of a label-space index within this matrix, if present.
    pub fn col_position(&self, label_index: usize) -> Option<usize> {
        // cols are sorted, but stay linear: column counts are tiny.
        self.cols.iter().position(|&c| c == label_index)
    }

    /// Whether every row is a probability vector within `tol`.
    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.values.rows().into_iter().all(|row| {
            let sum: f64 = row.sum();
            (sum - 1.0).abs() <= tol && row.iter().all(|&v| (-tol..=1.0 + tol).contains(&v))
        })
    }

    /// Project onto a label subset, in label-space order, copying columns.
    ///
    /// `subset` must name columns present in this matrix.
    pub fn restrict_columns(&self, subset: &[usize]) -> Result<ScoreMatrix> {
        let mut positions = Vec::with_capacity(subset.len());
        for &label in subset {
            match self.col_position(label) {
                Some(p) => positions.push(p),
                None => return Err(Error::UnknownLabel(format!("column index {label}"))),
            }
        }
        let values = self.values.select(ndarray::Axis(1), &positions);
        ScoreMatrix::new(subset.to_vec(), values)
    }
}

/// Winning candidate of one score row: maximal score, ties broken toward the
/// lowest label-space index. `candidates` are label-space indices aligned
/// with `row`.
pub fn argmax_label(row: ArrayView1<'_, f64>, candidates: &[usize]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if row.len() != candidates.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} candidates",
            row.len(),
            candidates.len()
        )));
    }
    let mut best = 0usize;
    for (k, &v) in row.iter().enumerate() {
        // Strict > keeps the earliest (lowest label index, since candidates
        // are in label-space order) on ties.
        if v > row[best] {
            best = k;
        }
    }
    Ok(candidates[best])
}

/// The coordinator's label-wise consensus scores over the public set.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalScoreState {
    pub iteration: u32,
    pub scores: ScoreMatrix,
}

impl GlobalScoreState {
    /// Iteration-0 state: all scores exactly zero over the full label space.
    pub fn initial(label_space: &LabelSpace, public_rows: usize) -> Self {
        Self {
            iteration: 0,
            scores: ScoreMatrix::zeros(label_space, public_rows),
        }
    }
}
