use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("the admissible subspace is empty (all {0} indices constrained)")]
    EmptySubspace(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver error: {message} (residual {residual:e})")]
    Solver { message: String, residual: f64 },

    #[error("eigenvalue {eigenvalue} at index {index} is not simple (relative gap {gap:e} < {threshold:e})")]
    Degenerate {
        index: usize,
        eigenvalue: f64,
        gap: f64,
        threshold: f64,
    },

    #[error("mass defect: base eigenfunction carries mass {mass} on the perturbed space (needs > 0.5)")]
    MassDefect { mass: f64 },

    #[error("tracking error: {0}")]
    Tracking(String),

    #[error("corrector has zero energy; the ratio is undefined and the shift is exact")]
    UndefinedRatio,

    #[error("model kind error: {0}")]
    Kind(String),

    #[error("insufficient data: {usable} usable points, need at least {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error("sweep error: {0}")]
    Sweep(String),
}

impl Error {
    pub(crate) fn solver(message: impl Into<String>, residual: f64) -> Self {
        Error::Solver {
            message: message.into(),
            residual,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
