use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlError {
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("decision set has more than {cap} elements")]
    TooLarge { cap: usize },

    #[error("decision set is empty")]
    EmptySet,

    #[error("no exact budgeted oracle for {0} within the enumeration cap")]
    OracleUnavailable(String),

    #[error("no compact exact hull for {0}")]
    Unsupported(String),

    #[error("coordinates {0:?} are not covered by any decision")]
    Uncovered(Vec<usize>),

    #[error("theta entry {index} is not positive ({value})")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reduction identity violated by {error:e} on decision {decision}")]
    IdentityViolation { decision: String, error: f64 },

    #[error("weight on coordinate {0} must be positive")]
    DivisionGuard(usize),

    #[error("numerical failure: {0}")]
    NumericFailure(String),

    #[error("iteration budget of {iterations} exhausted")]
    IterationBudgetExhausted { iterations: usize },

    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),
}

pub type Result<T> = std::result::Result<T, GlError>;
