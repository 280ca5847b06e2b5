//! The dataset CSV format.
//!
//! UTF-8, LF line endings, no quoting. First line is the header
//! `label,f0,f1,...,f{d-1}`; each following line is a label name and d
//! decimal floats.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::label::LabelSpace;

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::ParseError {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

/// Load a dataset, resolving label names against `label_space`. Rows keep
/// file order.
pub fn load_csv_dataset(path: &Path, label_space: &LabelSpace) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_dataset(&text, path, label_space)
}

fn parse_csv_dataset(text: &str, path: &Path, label_space: &LabelSpace) -> Result<Dataset> {
    let mut lines = text.split('\n').enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let n_features = parse_header(header).ok_or_else(|| {
        parse_err(path, 1, format!("header must be label,f0,...,f{{d-1}}, got {header:?}"))
    })?;

    let mut labels = Vec::new();
    let mut flat = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            // Only the trailing newline may leave an empty tail.
            continue;
        }
        let lineno = idx + 1;
        if line.contains('\r') {
            return Err(parse_err(path, lineno, "CR found; line endings must be LF"));
        }
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or("");
        let col = label_space
            .index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let mut count = 0usize;
        for f in fields {
            let v: f64 = f.parse().map_err(|_| {
                parse_err(path, lineno, format!("bad float {f:?}"))
            })?;
            flat.push(v);
            count += 1;
        }
        if count != n_features {
            flat.truncate(flat.len() - count);
            return Err(parse_err(
                path,
                lineno,
                format!("expected {n_features} features, got {count}"),
            ));
        }
        labels.push(col);
    }

    let n = labels.len();
    let features = Array2::from_shape_vec((n, n_features), flat)
        .map_err(|e| parse_err(path, 0, e.to_string()))?;
    Dataset::new(features, labels, label_space.len())
}

fn parse_header(header: &str) -> Option<usize> {
    let mut fields = header.split(',');
    if fields.next()? != "label" {
        return None;
    }
    let mut d = 0usize;
    for f in fields {
        if f != format!("f{d}") {
            return None;
        }
        d += 1;
    }
    (d > 0).then_some(d)
}

/// Write a dataset in the same format. Floats use Rust's shortest
/// round-trippable decimal form, so load(write(ds)) == ds exactly.
pub fn write_csv_dataset(path: &Path, dataset: &Dataset, label_space: &LabelSpace) -> Result<()> {
    let mut out = String::from("label");
    for k in 0..dataset.n_features() {
        let _ = write!(out, ",f{k}");
    }
    out.push('\n');
    for (row, &label) in dataset.features().rows().into_iter().zip(dataset.labels()) {
        out.push_str(label_space.name(label));
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
