use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sensor count must be at least 1")]
    ZeroSensors,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("at least two dimensions are required for pairwise statistics, got {0}")]
    TooFewDimensions(usize),

    #[error("diagonal entry {index} is not strictly positive ({value})")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("correlation entry ({row}, {col}) = {value} lies outside [-1, 1]")]
    CorrelationOutOfRange { row: usize, col: usize, value: f64 },

    #[error("matrix is not a valid correlation matrix: {0}")]
    NotCorrelation(String),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("Cholesky factorization failed: {0}")]
    Factorization(String),

    #[error(
        "linear system is singular after ridge regularization \
         (eigenvalue range [{min_eigenvalue:e}, {max_eigenvalue:e}], ridge {ridge:e})"
    )]
    Singular {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        ridge: f64,
    },

    #[error("error probabilities must satisfy 0 < alpha1, alpha2 and alpha1 + alpha2 < 1 (got {alpha1}, {alpha2})")]
    InvalidAlpha { alpha1: f64, alpha2: f64 },

    #[error(
        "expected LLR increments must satisfy h0 < 0 < h1 for the test to terminate as intended \
         (got h0 = {h0:e}, h1 = {h1:e})"
    )]
    WrongSignedIncrement { h0: f64, h1: f64 },

    #[error("{what} must be strictly positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },

    #[error("cannot aggregate an empty set of runs")]
    EmptyRunSet,

    #[error("moment cache: {0}")]
    Cache(String),

    #[error("config file: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
