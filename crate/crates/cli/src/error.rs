use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Engine(#[from] ouexact::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Engine(e) if is_input_error(e) => "invalid_input",
            CliError::Engine(_) => "runtime",
            CliError::Io(_) => "io",
            CliError::Json(_) => "invalid_json",
            CliError::Csv(_) => "invalid_csv",
            CliError::ValidationFailed(_) => "validation_failed",
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Json(_) | CliError::Csv(_) | CliError::ValidationFailed(_) => {
                ExitCode::from(2)
            }
            CliError::Engine(e) if is_input_error(e) => ExitCode::from(2),
            CliError::Engine(_) | CliError::Io(_) => ExitCode::from(3),
        }
    }
}

fn is_input_error(e: &ouexact::Error) -> bool {
    matches!(
        e,
        ouexact::Error::InvalidModel(_) | ouexact::Error::InvalidOption(_) | ouexact::Error::InvalidProblem(_)
    )
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;
