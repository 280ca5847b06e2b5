//! Validated experiment configuration.

use std::path::PathBuf;

use crate::data::{ShardPlan, SyntheticSpec};
use crate::error::{Error, Result};
use crate::label::LabelSpace;
use crate::learner::{ArchSpec, TrainConfig};
use crate::protocol::{AggregateMode, BetaAccMode};

/// Where a dataset comes from.
#[derive(Debug, Clone)]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic(SyntheticSpec),
}

/// One client: its label subset, architecture schedule, training
/// hyperparameters and shard plan.
#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub id: String,
    /// Claimed label subset, as sorted label-space indices.
    pub label_cols: Vec<usize>,
    /// Step function of the iteration: each entry takes effect at its
    /// iteration and persists until the next entry.
    pub arch_schedule: Vec<(u32, ArchSpec)>,
    pub train: TrainConfig,
    pub plan: ShardPlan,
}

impl ClientConfig {
    /// Architecture in effect at `iteration` (1-based).
    pub fn arch_for(&self, iteration: u32) -> &ArchSpec {
        let mut current = &self.arch_schedule[0].1;
        for (at, arch) in &self.arch_schedule {
            if *at <= iteration {
                current = arch;
            } else {
                break;
            }
        }
        current
    }
}

/// The full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub label_space: LabelSpace,
    pub public_source: DataSource,
    pub pool_source: DataSource,
    pub clients: Vec<ClientConfig>,
    pub iterations: u32,
    pub master_seed: u64,
    pub aggregate: AggregateMode,
    pub beta_acc: BetaAccMode,
    /// Re-initialize each client's model every iteration (false) or carry
    /// the previous iteration's weights when the architecture is unchanged.
    pub warm_start: bool,
    pub parallel_workers: usize,
}

impl ExperimentConfig {
    /// Everything checkable before loading data. Messages name the
    /// offending key.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::ConfigInvalid(msg));

        if self.iterations == 0 {
            return invalid("iterations: must be >= 1".into());
        }
        if self.parallel_workers == 0 {
            return invalid("parallel_workers: must be >= 1".into());
        }
        if self.clients.is_empty() {
            return invalid("clients: at least one client required".into());
        }

        let mut claimed = vec![false; self.label_space.len()];
        for (m, client) in self.clients.iter().enumerate() {
            let key = format!("clients[{m}] ({})", client.id);
            if client.id.is_empty() {
                return invalid(format!("{key}.id: must be non-empty"));
            }
            if self.clients[..m].iter().any(|c| c.id == client.id) {
                return invalid(format!("{key}.id: duplicate client id"));
            }
            if client.label_cols.is_empty() {
                return invalid(format!("{key}.labels: must be non-empty"));
            }
            if !client.label_cols.windows(2).all(|w| w[0] < w[1]) {
                return invalid(format!("{key}.labels: must be sorted and unique"));
            }
            for &l in &client.label_cols {
                if l >= self.label_space.len() {
                    return invalid(format!("{key}.labels: index {l} outside label_space"));
                }
                claimed[l] = true;
            }
            if client.arch_schedule.is_empty() {
                return invalid(format!("{key}.arch: schedule must be non-empty"));
            }
            if client.arch_schedule[0].0 != 1 {
                return invalid(format!("{key}.arch: first entry must start at iteration 1"));
            }
            if !client.arch_schedule.windows(2).all(|w| w[0].0 < w[1].0) {
                return invalid(format!("{key}.arch: iterations must be strictly increasing"));
            }
            for (at, arch) in &client.arch_schedule {
                if *at > self.iterations {
                    return invalid(format!(
                        "{key}.arch: entry at iteration {at} beyond iterations={}",
                        self.iterations
                    ));
                }
                arch.validate()
                    .map_err(|e| Error::ConfigInvalid(format!("{key}.arch: {e}")))?;
            }
            client
                .train
                .validate()
                .map_err(|e| Error::ConfigInvalid(format!("{key}.train: {e}")))?;
            for &l in client.plan.per_label.keys() {
                if !client.label_cols.contains(&l) {
                    return invalid(format!("{key}.shard.per_label: label index {l} not claimed"));
                }
            }
            for i in 1..=self.iterations {
                client
                    .plan
                    .counts_for(i)
                    .map_err(|e| Error::ConfigInvalid(format!("{key}.shard.skew: {e}")))?;
            }
            for &skew_iter in client.plan.skew.keys() {
                if skew_iter == 0 || skew_iter > self.iterations {
                    return invalid(format!(
                        "{key}.shard.skew: iteration {skew_iter} outside 1..={}",
                        self.iterations
                    ));
                }
            }
        }
        if let Some(unclaimed) = claimed.iter().position(|&c| !c) {
            return invalid(format!(
                "clients: label {:?} is claimed by no client",
                self.label_space.name(unclaimed)
            ));
        }
        Ok(())
    }

    /// Claimed label indices per client, aligned with `clients`.
    pub fn claims(&self) -> Vec<Vec<usize>> {
        self.clients.iter().map(|c| c.label_cols.clone()).collect()
    }
}
