use thiserror::Error;

use crate::units::Units;

pub type Result<T> = std::result::Result<T, QevError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QevError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unit mismatch: {left} vs {right}")]
    UnitMismatch { left: Units, right: Units },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero-norm event")]
    ZeroNorm,

    #[error("PhysicallyDisallowed: {which} has self-amplitude ratio {ratio:e} <= threshold {threshold:e}")]
    PhysicallyDisallowed { which: &'static str, ratio: f64, threshold: f64 },

    #[error("QuadratureFailure: {0}")]
    QuadratureFailure(String),

    #[error("grid axis {axis} has {len} points; at least {min} are required")]
    GridTooSmall { axis: usize, len: usize, min: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("StabilityViolation: {0}")]
    StabilityViolation(String),

    #[error("AllCandidatesDisallowed at step {step}")]
    AllCandidatesDisallowed { step: usize },

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for QevError {
    fn from(e: std::io::Error) -> Self {
        QevError::Io(e.to_string())
    }
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(QevError::DimensionMismatch { expected, found })
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(QevError::InvalidParameter(msg.into()))
}
