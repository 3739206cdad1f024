//! Scenario runner for the `homodyne` command-line tool.
//!
//! Subcommands: `qnl`, `trace`, `compare-detectors`, `selftest`. Exit codes:
//! 0 success, 1 validation error, 2 IO error, 3 selftest failure.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_compare_detectors, cmd_qnl, cmd_selftest, cmd_trace};
pub use config::ScenarioConfig;
pub use error::{CliError, CliResult};
