use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("empty series")]
    EmptySeries,

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("basis function '{0}' has no declared Lipschitz constant")]
    MissingLipschitz(String),

    #[error("solver did not converge: gap {gap:e} above tolerance {tolerance:e}")]
    NotConverged {
        best: Vec<f64>,
        gap: f64,
        tolerance: f64,
    },

    #[error("degenerate minimization: {0}")]
    Degenerate(String),

    #[error("missing bound input '{0}'")]
    MissingInput(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
