use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },

    /// A sample in a stream or dataset disagrees with the first one.
    #[error("sample {index}: dimension {found:?} does not match {expected:?}")]
    SampleDimension { index: usize, expected: (usize, usize), found: (usize, usize) },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("SVD did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    SvdNoConvergence { sweeps: usize, residual: f64 },

    #[error("not enough samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("Kronecker statistics for {rows}x{cols} samples exceed the m*n <= {limit} limit")]
    TooLarge { rows: usize, cols: usize, limit: usize },

    #[error("format error: {0}")]
    Format(String),

    /// An error tied to one dataset entry.
    #[error("{path}: {source}")]
    Entry {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// The innermost error, looking through [`Error::Entry`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Entry { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
