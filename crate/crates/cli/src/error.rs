use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Divergence(delaynet::Error),
    #[error("{0}")]
    Core(delaynet::Error),
    #[error("tolerance check failed: {0}")]
    Tolerance(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<delaynet::Error> for CliError {
    fn from(e: delaynet::Error) -> Self {
        use delaynet::Error as E;
        match e {
            e if e.is_divergence() => CliError::Divergence(e),
            E::InvalidArgument(m) => CliError::Config(m),
            E::Io(e) => CliError::Io(e),
            e => CliError::Core(e),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(delaynet::Error::Parse(e.to_string()))
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Tolerance(_) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        })
    }
}
