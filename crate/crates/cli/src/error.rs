use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or inconsistent input; nothing was run.
    #[error("config error: {0}")]
    Config(String),
    /// A run failed after the config was accepted.
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Run(_) => ExitCode::from(1),
        }
    }
}
