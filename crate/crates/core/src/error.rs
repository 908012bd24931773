use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {n} (supported range {min}..={max})")]
    Dimension { n: usize, min: usize, max: usize },

    #[error("matrix is not in SL(n): det = {det}")]
    NotUnimodular { det: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("enumeration budget of {limit} elements exceeded")]
    BudgetExceeded { limit: u64 },

    #[error("region and point live on different boundary spaces")]
    VariantMismatch,

    #[error("requested error bound {requested} not reached within {budget} samples (got {achieved})")]
    SampleBudget { requested: f64, achieved: f64, budget: u64 },

    #[error("quadrature did not converge: value {value}, error estimate {error}")]
    Quadrature { value: f64, error: f64 },

    #[error("modular reduction did not terminate within {steps} steps")]
    Degenerate { steps: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
