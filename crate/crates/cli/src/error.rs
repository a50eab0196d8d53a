use std::process::ExitCode;
use thiserror::Error;
use yamabe_core::YamabeError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<YamabeError> for CliError {
    fn from(e: YamabeError) -> Self {
        match e {
            YamabeError::InvalidDimension { .. }
            | YamabeError::NegativeDegree(_)
            | YamabeError::UnsupportedGrid(_)
            | YamabeError::InsufficientExactness { .. }
            | YamabeError::InvalidParameter(_) => CliError::Usage(e.to_string()),
            YamabeError::Io(io) => CliError::Io(io),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl CliError {
    /// 0 success, 1 numerical failure, 2 usage error.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}
