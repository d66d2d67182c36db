//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by ball operations, layers, the tape and the optimizers.
#[derive(Debug, Error)]
pub enum PoincareError {
    /// Two operands live in spaces of different dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two operands carry different curvatures.
    #[error("curvature mismatch: {left} vs {right}")]
    CurvatureMismatch { left: f64, right: f64 },

    /// An input is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side contract was broken (wrong arity, wrong kind, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A non-finite value reached a place that requires finite input.
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, PoincareError>;
