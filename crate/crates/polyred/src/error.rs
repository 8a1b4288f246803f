//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<V> = std::result::Result<V, Error>;

/// Everything that can go wrong while building or checking a structure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains a non-finite entry")]
    NonFiniteInput,

    #[error("ambient dimension mismatch: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not skew-symmetric (deviation {deviation:.3e})")]
    NotSkew { deviation: f64 },

    #[error("invalid group element: {0}")]
    InvalidGroupElement(String),

    #[error("invalid Lie algebra data: {0}")]
    InvalidLieAlgebra(String),

    #[error("inconsistent snapshot: {0}")]
    InconsistentSnapshot(String),

    #[error("no solution: residual {residual:.3e} exceeds tolerance")]
    NoSolution { residual: f64 },

    #[error("trajectory diverged at step {step}")]
    Diverged { step: usize },

    #[error("unsupported action: {0}")]
    UnsupportedAction(String),
}
