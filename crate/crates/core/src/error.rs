use std::io;

use thiserror::Error;

/// Errors produced by the estimators, the simulator and the CLI plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// A composite input (table, distribution, config) broke one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// Truncation parameters for the lower bound are inconsistent.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The requested accuracy cannot be reached with any finite training set.
    #[error("target {target} is unreachable; asymptote {asymptote}")]
    Unreachable { target: f64, asymptote: f64 },

    #[error("{path}:{line}: {message}")]
    WeightFile {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

/// Checks `lo <= x <= hi`, rejecting NaN.
pub(crate) fn check_closed(name: &str, x: f64, lo: f64, hi: f64) -> Result<()> {
    if x.is_nan() || x < lo || x > hi {
        return Err(domain(format!("{name} must be in [{lo}, {hi}], got {x}")));
    }
    Ok(())
}
