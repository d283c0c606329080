use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("non-numeric value {value:?} in column {column:?} at data row {row}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("column {0:?} not found")]
    MissingColumn(String),

    #[error("duplicate column label {0:?}")]
    DuplicateColumn(String),

    #[error("need more observations than coefficients (n = {n}, p = {p})")]
    TooFewRows { n: usize, p: usize },

    #[error("column {0:?} is constant")]
    DegenerateColumn(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{0} has zero norm")]
    ZeroNorm(&'static str),

    #[error("too many singular redraws ({redraws}, cap {cap})")]
    TooManyRedraws { redraws: usize, cap: usize },
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) | Error::NonNumeric { .. } | Error::MissingColumn(_) => "input",
            Error::DuplicateColumn(_) | Error::TooFewRows { .. } | Error::NonFinite(_) => "input",
            Error::DegenerateColumn(_) => "degenerate_column",
            Error::Dimension(_) | Error::NotSymmetric(_) => "dimension",
            Error::NotPositiveDefinite | Error::NoConvergence(_) => "numerical",
            Error::TooManyRedraws { .. } => "numerical",
            Error::InvalidParameter(_) | Error::InvalidGrid(_) | Error::ZeroNorm(_) => "parameter",
        }
    }
}
