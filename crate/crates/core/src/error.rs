use thiserror::Error;

/// Errors raised by learners, solvers and stream generators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector must have at least one coordinate")]
    EmptyVector,

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{solver} failed to converge (target {target}, residual {residual})")]
    SolverDiverged {
        solver: &'static str,
        target: f64,
        residual: f64,
    },

    #[error("gradient norm {norm} exceeds hint {hint}")]
    HintViolated { norm: f64, hint: f64 },

    #[error("hint decreased from {previous} to {next}")]
    HintDecreased { previous: f64, next: f64 },

    #[error("KT wealth became non-positive ({wealth}) at round {round}")]
    WealthExhausted { wealth: f64, round: usize },

    #[error("empty trace")]
    EmptyTrace,

    #[error("horizon {requested} exceeds the supported maximum {max}")]
    HorizonTooLarge { requested: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, context: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            context: context.to_string(),
        })
    }
}
