use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symmetric positive definite (pivot {pivot} = {value:e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension p = {0}")]
    UnsupportedDimension(usize),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("all observations downweighted (weight sum {weight_sum:e})")]
    AllDownweighted { weight_sum: f64 },

    #[error("reweighting step produced a non-SPD scatter matrix (pivot {pivot})")]
    DegenerateStep { pivot: usize },

    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
