use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed arguments that violate an operation's contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// A tensor product or state would exceed the dense-storage limit.
    #[error("dimension {dim} exceeds the dense limit of {limit}")]
    Size { dim: usize, limit: usize },

    /// Local dimensions of an input do not match what the operation expects.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    /// A channel or Kraus list is malformed (wrong factor count/shape, or no closure).
    #[error("structural error: {0}")]
    Structural(String),

    /// A documented precondition of a numerical routine is not met.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The operation is only defined for a restricted set of dimensions.
    #[error("unsupported dimensions {dims:?}: {reason}")]
    UnsupportedDims { dims: Vec<usize>, reason: String },

    /// A scanned channel family did not behave monotonically in its parameter.
    #[error("non-monotone family: breaking at {breaking} but not at {intact}")]
    NonMonotone { breaking: f64, intact: f64 },

    /// Input file could not be decoded.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A bounded internal loop (e.g. a redraw loop) gave up.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
