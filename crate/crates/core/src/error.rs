use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// An `inf - inf` (or other NaN-producing) combination of extended reals.
    #[error("undefined arithmetic evaluating {what} at {points:?}")]
    Undefined { what: String, points: Vec<Vec<f64>> },

    #[error("enumeration budget exceeded: {needed} configurations > budget {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },

    #[error("every candidate value is +inf: {0}")]
    AllInfinite(String),

    #[error("no finite-energy initial configuration after {attempts} attempts")]
    NoFiniteStart { attempts: usize },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Undefined { .. } => "undefined_arithmetic",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::AllInfinite(_) => "all_infinite",
            Error::NoFiniteStart { .. } => "no_finite_start",
            Error::LinearProgram(_) => "linear_program",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
