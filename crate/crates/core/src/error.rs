use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument lies outside its admissible domain (negative beta,
    /// empty bracket, non-positive tolerance, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Problem assembly failed: missing baseline, incomplete potential map.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input that does not have the expected shape (bad CSV header).
    #[error("format error: {0}")]
    Format(String),

    /// A single data row could not be parsed.
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    /// Parsed values violate a type invariant (duplicate names, empty set).
    #[error("validation error: {0}")]
    Validation(String),

    /// The numerics produced something they should not have.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 for numeric failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => 1,
            _ => 2,
        }
    }
}
