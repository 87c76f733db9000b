//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration file or parameter set violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Operands do not agree in shape.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A pulse index outside the selected pulse set was requested.
    #[error("pulse {0} is not in the selected pulse set")]
    PulseNotSelected(usize),

    /// The requested model order is not supported by the matrix spectrum.
    #[error("rank test failed: {0}")]
    RankDeficiency(String),

    /// Non-finite values or a failed factorization inside an iteration.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed row or field in a data CSV.
    #[error("csv error: {0}")]
    Csv(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration/input problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}
