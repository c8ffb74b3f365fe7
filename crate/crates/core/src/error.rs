use thiserror::Error;

/// Errors raised by the analysis and quadrature routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("phase has constant or linear terms; the origin must be a critical point with zero value")]
    NotCriticalAtOrigin,

    #[error("degenerate critical point: |det Hess| = {det:e} at {point:?}")]
    DegenerateCriticalPoint { det: f64, point: Vec<f64> },

    #[error("weighted Hessian degenerate at {point:?} (|det| = {det:e})")]
    DegenerateWeightedHessian { det: f64, point: Vec<f64> },

    #[error("restricted Hessian degenerate along the fold curve at {point:?} (value {value:e})")]
    DegenerateRestrictedHessian { value: f64, point: Vec<f64> },

    #[error("rank condition fails at seed {point:?}")]
    RankDeficient { point: Vec<f64> },

    #[error("derivative order {requested} exceeds the supported budget {budget}")]
    DerivativeBudget { requested: usize, budget: usize },

    #[error("quadrature budget exceeded: {0}")]
    Budget(String),

    #[error("ill-conditioned regression: {0}")]
    IllConditioned(String),

    #[error("phase file: {0}")]
    PhaseFile(String),
}

impl Error {
    /// Failures caused by an exhausted numerical budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
