//! The experiment-wide ordered label set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of label names, fixed for the lifetime of an experiment.
///
/// All score-matrix columns, dataset labels and client label subsets are
/// indices into this space; column order always follows this order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    labels: Vec<String>,
}

impl LabelSpace {
    /// Wire payloads carry one byte per column index.
    pub const MAX_LABELS: usize = 256;

    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::ConfigInvalid("label_space must be non-empty".into()));
        }
        if labels.len() > Self::MAX_LABELS {
            return Err(Error::ConfigInvalid(format!(
                "label_space has {} labels, maximum is {}",
                labels.len(),
                Self::MAX_LABELS
            )));
        }
        for (k, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::ConfigInvalid(format!("label_space[{k}] is empty")));
            }
            if labels[..k].contains(l) {
                return Err(Error::ConfigInvalid(format!("duplicate label {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// 0-based column index of a label name.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Like [`index_of`](Self::index_of) but failing with `UnknownLabel`.
    pub fn resolve(&self, label: &str) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn name(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn names(&self) -> &[String] {
        &self.labels
    }

    /// All column indices, in order.
    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.labels.len()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trips() {
        let ls = LabelSpace::new(["cat", "dog", "sheep", "elephant"]).unwrap();
        assert_eq!(ls.len(), 4);
        for k in 0..ls.len() {
            assert_eq!(ls.index_of(ls.name(k)), Some(k));
        }
        assert_eq!(ls.index_of("zebra"), None);
        assert!(matches!(ls.resolve("zebra"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(LabelSpace::new(["a", "a"]).is_err());
        assert!(LabelSpace::new(Vec::<String>::new()).is_err());
        assert!(LabelSpace::new(["a", ""]).is_err());
    }
}
