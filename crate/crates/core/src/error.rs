use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("zero or negative variance on the diagonal at index {0}")]
    ZeroVariance(usize),

    #[error("unstable system: spectral radius {0} >= 1")]
    Unstable(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of range: {what} = {got}, limit {limit}")]
    IndexOutOfRange {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("step reached the boundary of the feasible set (row radius^2 {0:.3e})")]
    BoundaryViolation(f64),

    #[error("optimizer stuck at the feasible-set boundary after {0} step halvings")]
    BoundaryStuck(usize),

    #[error("degenerate input: covariance remained non-positive-definite after jitter up to {0:.1e}")]
    DegenerateInput(f64),

    #[error("wrong shape: {0}")]
    WrongShape(String),

    #[error("insufficient samples: L = {l} but need L > {need}")]
    InsufficientSamples { l: usize, need: usize },

    #[error("linear system is numerically singular: {0}")]
    SingularSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("target mutual information {target} nats unreachable (maximum {max} at bracket)")]
    TargetUnreachable { target: f64, max: f64 },

    #[error("numerical blowup: state left [-10, 10] at step {0}")]
    NumericalBlowup(usize),

    #[error("CSV parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("ragged rows: row {row} has {got} fields, expected {expected}")]
    RaggedRows {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("non-numeric value {value:?} at row {row}, column {col}")]
    NonNumeric {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("constant channel {0}: rank transform undefined")]
    ConstantChannel(usize),

    #[error("too few samples: {l} pairs for {dims} dimensions")]
    TooFewSamples { l: usize, dims: usize },

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
