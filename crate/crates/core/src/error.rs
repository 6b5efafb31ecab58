use thiserror::Error;

/// Errors produced while building, querying or decoding filters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("hash range must be at least 1")]
    InvalidRange,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("duplicate key at input position {0}")]
    DuplicateKey(usize),

    #[error("value {value} at input position {index} does not fit in {k} bits")]
    ValueOutOfRange { index: usize, value: u64, k: u32 },

    #[error("build failed after {attempts} attempts: {reason}")]
    BuildFailure { attempts: u32, reason: String },

    #[error("bucket {bucket}: {source}")]
    Bucket {
        bucket: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("key is not part of the stored support")]
    UnknownKey,

    #[error("division by zero in F_{0}")]
    DivisionByZero(u64),

    #[error("input too large for exhaustive routine: {0}")]
    UnsupportedSize(String),

    #[error("sampling budget of {0} draws exhausted")]
    RetryBudget(u64),

    #[error("malformed filter image at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("unsupported scheme id {0}")]
    UnsupportedScheme(u8),

    #[error("malformed input at line {line}: {msg}")]
    Input { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
