//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by geometric constructions and analyses.
#[derive(Error, Debug, Clone)]
pub enum LieError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a contact line: residual {residual:.3e} exceeds tolerance")]
    NotAContactLine { residual: f64 },

    #[error("degenerate line: representatives are dependent (relative sv {smallest_sv:.3e})")]
    DegenerateLine { smallest_sv: f64 },

    #[error("vector is not on the Lie quadric (residual {residual:.3e})")]
    NotASphere { residual: f64 },

    #[error("normal field violates normality (residual {residual:.3e})")]
    NotANormalField { residual: f64 },

    #[error("map is not an immersion at the sampled point (relative sv {smallest_sv:.3e})")]
    NotAnImmersion { smallest_sv: f64 },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("operation requires {required} provenance, map has {found}")]
    UnsupportedProvenance {
        required: &'static str,
        found: String,
    },

    #[error("projection singular at parameter {param:?}")]
    ProjectionSingular { param: Vec<f64> },

    #[error("parameter {param:?} outside oracle domain")]
    OutOfDomain { param: Vec<f64> },

    #[error("curvature-line path truncated: {reason}")]
    PathTruncated { reason: String },

    #[error("curvature-sphere branch tracking lost: {0}")]
    TrackingLost(String),

    #[error("invalid construction: {0}")]
    InvalidConstruction(String),

    #[error("cross-ratio undefined: points coincide")]
    UndefinedCrossRatio,

    #[error("maps are not equivalent: {0}")]
    NotEquivalent(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, LieError>;
