//! Command-line driver: config parsing, run dispatch and result files.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ExperimentFile, KeyValues, MarkovConfig};
pub use output::{read_series_csv, write_series_csv, RunManifest};
pub use run::{run, Command, RunOptions};

/// Failures surfaced to the user, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 1 for configuration errors, 2 for everything raised while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<mpemba_core::Error> for CliError {
    fn from(e: mpemba_core::Error) -> Self {
        match e {
            mpemba_core::Error::InvalidConfig(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}
