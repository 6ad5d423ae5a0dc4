use std::process::ExitCode;

use deeptriangle::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[source] Error),
    #[error("training error: {0}")]
    Training(#[source] Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Training(_) => 3,
        })
    }
}

/// Tags core errors with the phase they surfaced in.
pub trait Phase<T> {
    fn data(self) -> Result<T, CliError>;
    fn training(self) -> Result<T, CliError>;
}

impl<T> Phase<T> for Result<T, Error> {
    fn data(self) -> Result<T, CliError> {
        self.map_err(CliError::Data)
    }

    fn training(self) -> Result<T, CliError> {
        self.map_err(CliError::Training)
    }
}
