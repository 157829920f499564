use thiserror::Error;

/// Crate-wide error type. The CLI maps the variants onto exit codes
/// (config 2, assumption 3, everything else 4).
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad scenario file, inconsistent dimensions,
    /// invalid hyperparameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A standing assumption of the recovery algorithm is violated
    /// (non-unit rows, uncovered components, disconnected subnetwork, ...).
    #[error("assumption violation: {0}")]
    Assumption(String),

    /// Numerical or runtime failure during an operation.
    #[error("runtime failure: {0}")]
    Runtime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
