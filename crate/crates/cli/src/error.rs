use thiserror::Error;

/// Failures surfaced to the operator. The variant decides the exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, contradictory parameters or malformed input data.
    #[error("{0}")]
    Usage(String),
    /// A build that could not complete or a filter that could not be read.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 3,
        }
    }
}

impl From<bloomier::Error> for CliError {
    fn from(e: bloomier::Error) -> Self {
        use bloomier::Error::*;
        match e {
            InvalidRange | InvalidParams(_) | DuplicateKey(_) | ValueOutOfRange { .. } | Input { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
