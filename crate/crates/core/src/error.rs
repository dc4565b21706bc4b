use thiserror::Error;

/// Errors produced by the planning and simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("generator indices must satisfy 1 <= i < j <= n (got i={i}, j={j}, n={n})")]
    IndexOrder { i: usize, j: usize, n: usize },

    #[error("n ≥ 2 required (got {0})")]
    DimensionTooSmall(usize),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("not unitary: |M^H M - I|_F = {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("determinant not 1: |det - 1| = {residual:e}")]
    NotSpecial { residual: f64 },

    #[error("not skew-Hermitian: |M + M^H|_F = {residual:e}")]
    NotSkewHermitian { residual: f64 },

    #[error("not traceless: |tr M| = {residual:e}")]
    NotTraceless { residual: f64 },

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("reference is not periodic enough: residual {residual:e} exceeds gate {gate:e}")]
    PeriodicityGate { residual: f64, gate: f64 },

    #[error("reference is not regular: span rank {rank} < {required}")]
    RegularityGate { rank: usize, required: usize },

    #[error(
        "segment {segment} hit its horizon cap at t = {time} before the stop rule fired \
         (V reached {achieved_v})"
    )]
    HorizonExceeded {
        segment: usize,
        time: f64,
        achieved_v: f64,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
