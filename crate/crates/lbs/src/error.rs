use thiserror::Error;

#[derive(Debug, Error)]
pub enum LbsError {
    #[error(transparent)]
    Core(#[from] geoind_core::Error),

    /// A POI file row could not be read. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The upstream provider could not be reached.
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    /// The upstream answered with something other than a result list.
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

pub type Result<T> = std::result::Result<T, LbsError>;
