use thiserror::Error;

use crate::varieties::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("lattice of rank {rank} in dimension {dim} is not full rank")]
    NotFullRank { rank: usize, dim: usize },
    #[error("form is not alternating")]
    NotAlternating,
    #[error("form is degenerate; its kernel group would be infinite")]
    DegenerateForm,
    #[error("sublattice is not contained in the claimed superlattice")]
    NotContained,
    #[error("homomorphism is not an isogeny (determinant zero or non-square)")]
    NotAnIsogeny,
    #[error("matrix does not commute with the complex structures")]
    NotAHomomorphism,
    #[error("subgroups live on different varieties")]
    VarietyMismatch,
    #[error("invalid variety: {0}")]
    InvalidVariety(ValidationReport),
    #[error("invalid class: {0}")]
    InvalidClass(String),
    #[error("slope denominator must be positive")]
    ZeroDenominator,
    #[error("slope is not reduced: gcd of denominator and class entries is {0}")]
    NotReduced(String),
    #[error("complex structures of scales {0} and {1} cannot be combined over the rationals")]
    IncompatibleScales(String, String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
