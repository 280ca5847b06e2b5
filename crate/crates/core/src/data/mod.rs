//! Dataset loading, synthetic generation and shard partitioning.

mod csv;
mod partition;
mod synthetic;

pub use csv::{load_csv_dataset, write_csv_dataset};
pub use partition::{draw_shard, DrawnShard, PoolSlices, ShardPlan};
pub use synthetic::{
    generate_synthetic, generate_synthetic_dataset, LabelGaussian, LabelPools, Standardizer,
    SyntheticSpec,
};
