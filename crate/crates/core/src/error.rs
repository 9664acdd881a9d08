use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data such as a negative bid or mismatched lengths.
    #[error("invalid input: {0}")]
    Input(String),

    /// A run configuration failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The distribution's virtual value is not strictly increasing.
    #[error("regularity violation: virtual value of {0} is not strictly increasing")]
    Irregular(String),

    /// Root finding failed to bracket or converge.
    #[error("solver failure: {0}")]
    Solver(String),

    /// The brute-force oracle instance is too large to enumerate.
    #[error("state space of {size} exceeds the limit of {limit}")]
    StateSpaceOverflow { size: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for this error: 3 for solver failures, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Solver(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
