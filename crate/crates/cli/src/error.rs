use std::path::PathBuf;

use crate::config::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {}: {source}", path.display())]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("config key {key}: {reason}")]
    Config { key: String, reason: String },
    #[error("scenario {scenario}: {source}")]
    Solver { scenario: Scenario, source: rvo_core::Error },
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration problems, 3 for solver faults, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReadConfig { .. } | CliError::Config { .. } => 2,
            CliError::Solver { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}
