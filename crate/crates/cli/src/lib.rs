//! Library side of the experiment harness: config parsing, scenario
//! construction, sweep execution and report summarization. The `fogsim`
//! binary is a thin wrapper over these.

pub mod config;
pub mod runner;
pub mod summary;

use thiserror::Error;

pub use config::{dump_config, load_config, parse_config, ConfigError, ScenarioConfig};
pub use runner::{build_scenario, run_one, run_sweep, SweepPreset, TRACE_DIR_ENV};
pub use summary::summarize;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run failed: {0}")]
    Run(String),
    #[error("summarize failed: {0}")]
    Summarize(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 1 for configuration problems, 2 for run problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            _ => 2,
        }
    }
}
