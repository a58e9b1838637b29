use std::path::PathBuf;

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("invalid map parameters: {0}")]
    InvalidParams(String),
    #[error("numerator reached {bits} bits at step {step} (cap {cap})")]
    ResourceLimit { step: usize, bits: u64, cap: u64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AffineError {
    #[error("empty interval [{lo}, {hi})")]
    EmptyInterval { lo: Rational, hi: Rational },
    #[error("interval [{lo}, {hi}) straddles branch boundary {boundary} at step {step}")]
    BranchStraddle { step: usize, boundary: Rational, lo: Rational, hi: Rational },
    #[error("slope is 1: no unique fixed point")]
    NoUniqueFixedPoint,
    #[error("fixed point {fixed_point} lies outside [{lo}, {hi})")]
    FixedPointOutsideInterval { fixed_point: Rational, lo: Rational, hi: Rational },
    #[error("integer parts {found:?} are not a rotation of the conjectured cycle pattern")]
    PatternMismatch { found: Vec<i64> },
    #[error("{0} does not return to itself after {1} steps")]
    NotPeriodic(Rational, usize),
    #[error("interval tracing needs the HighAtThreshold boundary rule")]
    UnsupportedBoundaryRule,
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Error)]
pub enum ProverError {
    #[error("need a_in < b_in <= b_out, got a_in={a_in}, b_in={b_in}, b_out={b_out}")]
    InvalidRange { a_in: Rational, b_in: Rational, b_out: Rational },
    #[error("orbit of {bound} did not land in [{a_in}, {bound}) within {cap} steps")]
    OrbitCapExceeded { a_in: Rational, bound: Rational, cap: usize },
    #[error("extension cap {cap} reached at bound {bound}")]
    ExtensionCapExceeded { cap: usize, bound: Rational },
    #[error("check failed at x = {witness}: value {value}")]
    CheckFailed { witness: Rational, value: Rational },
    #[error("stage {0} failed its check")]
    StageFailed(String),
    #[error("piecewise functions have different domains")]
    DomainMismatch,
    #[error("invalid piecewise function: {0}")]
    InvalidPiecewise(String),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Affine(#[from] AffineError),
    #[error(transparent)]
    Map(#[from] MapError),
}

impl ProverError {
    /// Budget or cap exhaustion, as opposed to a failed check.
    pub fn is_exhaustion(&self) -> bool {
        matches!(self, ProverError::OrbitCapExceeded { .. } | ProverError::ExtensionCapExceeded { .. })
    }
}

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct IoError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

impl From<IoError> for ProverError {
    fn from(e: IoError) -> Self {
        ProverError::Io { path: e.path, source: e.source }
    }
}
