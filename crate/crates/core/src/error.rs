use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("non-coercive coefficient: b({x}, {t}) = {value} is below delta = {delta}")]
    NonCoercive {
        x: f64,
        t: f64,
        value: f64,
        delta: f64,
    },

    #[error("coefficient bound violated at ({x}, {t}): |b|+|f|+|lambda| = {value} > {bound}")]
    UnboundedCoefficient {
        x: f64,
        t: f64,
        value: f64,
        bound: f64,
    },

    #[error("non-finite sample of {what} at ({x}, {t})")]
    NonFiniteSample { what: &'static str, x: f64, t: f64 },

    #[error("grid functions live on different meshes")]
    MeshMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("linear solve produced non-finite values at time step {step}")]
    LinearSolveFailure { step: usize },

    #[error("denominator vanishes: {0}")]
    ZeroDenominator(String),

    #[error("no passing shift K found up to K_max = {k_max}")]
    NotFound { k_max: f64 },

    #[error("resolution too coarse: mode m = {m} needs at least {required} cells, got {n_cells}")]
    ResolutionTooCoarse {
        m: u32,
        n_cells: usize,
        required: usize,
    },

    #[error("history holds {available} frames, step {step} requested")]
    HistoryTooShort { step: usize, available: usize },

    #[error("nonlocal operator invariant violated: {0}")]
    InvariantViolation(String),

    #[error("exponential shift overflows: K * T = {0} exceeds 700")]
    Overflow(f64),

    #[error("iteration is not contracting even at K = {k_max}")]
    NoContraction { k_max: f64 },

    #[error("no convergence after {iters} iterations (relative residual {residual:e})")]
    MaxItersExceeded { iters: usize, residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("table error: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
