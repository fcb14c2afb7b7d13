use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("unsupported para-Bose order p = {0}: only even orders are realized")]
    OddOrder(usize),

    #[error("argument outside the supported domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("truncation gate failed: {0}")]
    Truncation(String),

    #[error("closed form could not be reconciled: {0}")]
    Reconciliation(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Truncation(_) | Error::Reconciliation(_) | Error::Linalg(_) => 3,
            Error::NotHermitian(_) => 3,
            _ => 2,
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
