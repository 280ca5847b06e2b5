//! Client-chosen model architectures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-layer activation. `Softmax` normalizes over the layer's own units;
/// unusual for hidden layers, but clients are free to pick it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Softmax,
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
}

/// Hidden-layer stack of an MLP. The output layer (linear into a softmax
/// over the client's label subset) is implied and sized at init time.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ArchSpec {
    pub hidden: Vec<LayerSpec>,
}

impl ArchSpec {
    pub fn new(hidden: Vec<(usize, Activation)>) -> Self {
        Self {
            hidden: hidden
                .into_iter()
                .map(|(units, activation)| LayerSpec { units, activation })
                .collect(),
        }
    }

    /// No hidden layers: plain softmax regression.
    pub fn softmax_regression() -> Self {
        Self { hidden: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, layer) in self.hidden.iter().enumerate() {
            if layer.units == 0 {
                return Err(Error::InvalidArch(format!(
                    "hidden layer {k} has zero units"
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.hidden.is_empty() {
            return f.write_str("softmax-regression");
        }
        let parts: Vec<String> = self
            .hidden
            .iter()
            .map(|l| format!("{}:{}", l.units, l.activation))
            .collect();
        write!(f, "mlp({})", parts.join(","))
    }
}
