//! Config parsing and report emission behind the `fedscore` binary.

pub mod config_file;
pub mod emit;

pub use config_file::{parse_config, parse_gen_spec};
pub use emit::{emit_report, load_report, summary_csv};
