use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate reflection vector (norm {norm:e})")]
    DegenerateVector { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not orthogonal: max |U^T U - I| = {deviation:e} exceeds {tol:e}")]
    NotOrthogonal { deviation: f64, tol: f64 },

    #[error("row {row} has zero norm")]
    ZeroRow { row: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("input has no rows")]
    EmptyInput,

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("item {index} has no labels")]
    MissingLabels { index: usize },

    #[error("query set is empty")]
    EmptyQuerySet,

    #[error("singular value decomposition failed at iteration {iteration}")]
    Svd { iteration: usize },

    #[error("cannot draw {classes} distinct codes of {bits} bits")]
    TooManyClasses { classes: usize, bits: usize },

    #[error("format error at byte offset {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(offset: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}
