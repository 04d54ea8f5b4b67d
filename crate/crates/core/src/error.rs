use thiserror::Error;

use crate::mesh::RegionTag;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("region {0} has no boundary facets")]
    EmptyRegion(RegionTag),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("region mismatch: {0}")]
    RegionMismatch(String),
    #[error("newton_nonconvergence after {iterations} iterations (residual {residual:e})")]
    NewtonNonconvergence { iterations: usize, residual: f64 },
    #[error("fixedpoint_nonconvergence after {iterations} iterations (relative update {update:e})")]
    FixedPointNonconvergence { iterations: usize, update: f64 },
    #[error("linear_solve_failure: {0}")]
    LinearSolveFailure(String),
    #[error("smallness_violation: {inequality} fails with margin {margin:e}")]
    SmallnessViolation { inequality: String, margin: f64 },
    #[error("cycle_detected: active set oscillates after {iterations} iterations")]
    CycleDetected { iterations: usize },
    #[error("too_many_constraints: {count} constrained points exceed the enumeration limit {max}")]
    TooManyConstraints { count: usize, max: usize },
    #[error("no_feasible_subset: no active set satisfies the KKT conditions")]
    NoFeasibleSubset,
    #[error("missing eigenvalue estimate: {0}")]
    MissingEigenvalue(&'static str),
    #[error("eigen_nonconvergence: {0}")]
    EigenNonconvergence(String),
    #[error("reference unavailable: {0}")]
    ReferenceUnavailable(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field: field.to_string(), reason: reason.into() }
}
