//! Benchmark runner for the specgp models: experiment configs, fitting,
//! scoring and result files.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;
pub use run::{compare, execute, execute_on, load_dataset, resolve_data_dir, sweep, write_run, RunResult};
