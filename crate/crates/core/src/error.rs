use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// No ε′ satisfies the discretization bound for the given precision.
    #[error("calibration infeasible: {reason} (q = {q})")]
    Infeasible { q: f64, reason: String },

    /// Two location tuples (or vectors) of different lengths were combined.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// The admissible region contains no grid point.
    #[error("admissible region contains no grid point")]
    EmptyRegion,

    /// A point that must lie in the admissible region does not.
    #[error("location ({x}, {y}) lies outside the admissible region")]
    OutsideRegion { x: f64, y: f64 },

    /// A matrix, prior or world failed validation.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// A Bayesian update conditioned on an event of probability zero.
    #[error("observation has zero probability under the prior")]
    ZeroProbabilityObservation,

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
