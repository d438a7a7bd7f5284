//! Error type shared across the decomposition pipeline.

use thiserror::Error;

/// Errors produced by measure validation, basis construction, system
/// assembly, and the integration routines.
#[derive(Error, Debug)]
pub enum GaddError {
    #[error("variable subset is invalid: {0}")]
    InvalidSubset(String),

    #[error("covariance matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error(
        "covariance matrix is not symmetric: |S[{i},{j}] - S[{j},{i}]| = {diff:e} exceeds tolerance"
    )]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error(
        "covariance matrix is not positive definite: Cholesky pivot {pivot:e} at index {index} is below the threshold {threshold:e}"
    )]
    NotPositiveDefinite {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("subsets {a:?} and {b:?} must be disjoint")]
    OverlappingSubsets { a: Vec<usize>, b: Vec<usize> },

    #[error("subset {inner:?} is not contained in {outer:?}")]
    SubsetNotContained {
        inner: Vec<usize>,
        outer: Vec<usize>,
    },

    #[error("total degree {degree} exceeds the moment-oracle cap of {cap}")]
    DegreeTooLarge { degree: u32, cap: u32 },

    #[error("polynomial has non-positive norm {norm:e}; the marginal covariance is numerically ill-conditioned")]
    NonPositiveNorm { norm: f64 },

    #[error("coupling condition violated for subsets {u:?} and {v:?}: requires overlap with v not contained in u and v != u")]
    CouplingCondition { u: Vec<usize>, v: Vec<usize> },

    #[error("quadrature order {n} is outside the supported range 1..={max}")]
    QuadratureOrder { n: usize, max: usize },

    #[error(
        "dimension-reduction order {order} is unsupported; only orders 1 and 2 are implemented"
    )]
    UnsupportedReductionOrder { order: usize },

    #[error("linear system is ill-conditioned: condition estimate {cond:e} exceeds 1e12")]
    IllConditioned { cond: f64 },

    #[error("linear solve failed: residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolverResidual { residual: f64, tolerance: f64 },

    #[error("response variance {variance:e} is too close to zero for sensitivity analysis")]
    DegenerateResponse { variance: f64 },

    #[error("model evaluation failed: {0}")]
    ModelEvaluation(String),

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("serialization failed: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, GaddError>;
