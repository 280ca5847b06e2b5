//! Experiment records and the per-user summary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::protocol::{AggregateMode, BetaAccMode};

/// Everything a run produces, minus wall-clock timings (kept out of the
/// serialized form so identical runs serialize byte-identically).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub meta: RunMeta,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub label_space: Vec<String>,
    pub iterations: u32,
    pub master_seed: u64,
    pub aggregate: AggregateMode,
    pub beta_acc: BetaAccMode,
    pub warm_start: bool,
    pub public_examples: usize,
    pub n_features: usize,
    pub clients: Vec<ClientMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientMeta {
    pub id: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    /// Consensus accuracy on the full public set over all labels.
    pub global_accuracy: f64,
    /// One record per participating client, in config order.
    pub clients: Vec<ClientRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientRecord {
    pub id: String,
    pub arch: String,
    pub alpha: f64,
    pub shard_size: usize,
    pub shard_per_label: BTreeMap<String, usize>,
    pub betas: BTreeMap<String, f64>,
    /// Accuracy of this client's alpha-updated scores on its eligible
    /// public examples.
    pub local_accuracy: f64,
    /// Accuracy of the post-aggregation consensus, restricted to this
    /// client's labels, on the same examples.
    pub global_accuracy: f64,
    pub epochs_run: usize,
    pub final_loss: f64,
    pub param_count: usize,
    pub score_payload_bytes: usize,
    pub weight_payload_bytes: usize,
    pub payload_ratio: f64,
    pub reshuffled_labels: Vec<String>,
    /// Wall-clock train time. Reported for inspection only and excluded
    /// from serialization: it would break run-to-run byte identity.
    #[serde(skip)]
    pub train_ms: f64,
}

/// Per-user accuracy means in percent-friendly fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub id: String,
    pub records: usize,
    pub local_mean: f64,
    pub global_mean: f64,
    pub increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub users: Vec<UserSummary>,
    /// Mean of the per-user means (matching how multi-user tables average).
    pub overall_local: f64,
    pub overall_global: f64,
    pub overall_increase: f64,
}

/// Per-user mean local/global accuracies and their difference. Users with
/// no participating records are omitted.
pub fn summarize(report: &ExperimentReport) -> Summary {
    let mut users = Vec::new();
    for client in &report.meta.clients {
        let mut local = 0.0;
        let mut global = 0.0;
        let mut n = 0usize;
        for iter in &report.iterations {
            for rec in &iter.clients {
                if rec.id == client.id {
                    local += rec.local_accuracy;
                    global += rec.global_accuracy;
                    n += 1;
                }
            }
        }
        if n == 0 {
            continue;
        }
        let local_mean = local / n as f64;
        let global_mean = global / n as f64;
        users.push(UserSummary {
            id: client.id.clone(),
            records: n,
            local_mean,
            global_mean,
            increase: global_mean - local_mean,
        });
    }
    let k = users.len().max(1) as f64;
    let overall_local = users.iter().map(|u| u.local_mean).sum::<f64>() / k;
    let overall_global = users.iter().map(|u| u.global_mean).sum::<f64>() / k;
    Summary {
        overall_local,
        overall_global,
        overall_increase: overall_global - overall_local,
        users,
    }
}
