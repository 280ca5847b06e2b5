//! Experiment orchestration: config, iteration loop, records.

mod config;
mod report;
mod run;

pub use config::{ClientConfig, DataSource, ExperimentConfig};
pub use report::{
    summarize, ClientMeta, ClientRecord, ExperimentReport, IterationRecord, RunMeta, Summary,
    UserSummary,
};
pub use run::{prepare_data, run_experiment, run_iteration, PreparedData};
