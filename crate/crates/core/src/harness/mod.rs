//! Batch experiment runner behind the `minmove` binary: config parsing,
//! deterministic runs writing CSV artifacts, and directory summaries.
//!
//! Exit codes: 0 when every assertion passes, 1 on a failed assertion or a
//! runtime error (recorded in `assertions.csv`), 2 on a config error, in
//! which case nothing is written.

pub mod config;
pub mod report;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use report::{summarize, Summary};
pub use run::{run_bytes, run_file, RunOptions, RunSummary};
