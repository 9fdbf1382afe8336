use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weight {index} must be positive, got {value}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation requires {expected} geometry")]
    WrongGeometry { expected: &'static str },

    #[error("relaxation value {0} is not positive; the lifted matrix is undefined")]
    NonPositiveRelaxation(f64),

    #[error("matrix diagonal block has zero trace")]
    ZeroTrace,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("problem size {n} exceeds the enumeration limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("sample budget of {budget} draws exhausted without acceptance")]
    BudgetExhausted { budget: u64 },

    #[error("bisection failed: {0}")]
    Bisection(String),

    #[error("linear program is {0}")]
    Lp(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
