use thiserror::Error;

/// Errors raised across the simulation stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The optimal assignment is not unique, or the instance is otherwise unusable.
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    /// An enumeration would exceed its cap.
    #[error("problem too large: {count} items exceeds cap {cap}")]
    TooLarge { count: u128, cap: u128 },

    #[error("instance generation failed after {attempts} attempts")]
    GenerationFailure { attempts: usize },

    /// Agents disagreed on shared state, or a decentralized invariant broke.
    #[error("protocol failure: {0}")]
    ProtocolFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
