use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violates its domain. The message is user-facing.
    #[error("{0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite {what} at component {component}")]
    NonFinite {
        what: &'static str,
        component: usize,
    },

    #[error("division by zero: second moment is 0 in component {component}")]
    DivisionByZero { component: usize },

    #[error("invalid interpolation data: {0}")]
    InvalidKnots(String),

    #[error("second derivative undefined at knot t = {t}")]
    AtKnot { t: f64 },

    #[error("non-finite argument t = {0}")]
    NonFiniteArgument(f64),

    #[error("trajectory needs at least {needed} records, found {found}")]
    NotEnoughRecords { needed: usize, found: usize },

    #[error("trajectory records are not contiguous at k = {k}")]
    NonContiguous { k: u64 },

    #[error("missing function value in record k = {k}")]
    MissingFunctionValue { k: u64 },

    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateSpan { lo: f64, hi: f64 },

    #[error("non-finite {what} at step {step}")]
    NonFiniteAtStep { what: &'static str, step: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
