use thiserror::Error;

/// Errors raised by geometry construction, quantization and the check suite.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model kind `{0}`")]
    UnknownKind(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point {0} is not in the interior of the model")]
    NotInterior(f64),
    #[error("points are {distance} apart, beyond the injectivity radius {radius}")]
    BeyondInjectivityRadius { distance: f64, radius: f64 },
    #[error("cutoff radius {r} must lie in (0, {r0})")]
    CutoffRadius { r: f64, r0: f64 },
    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("symbol `{0}` is not smoothing (order -inf required)")]
    NotSmoothing(String),
    #[error("principal part unavailable: {0}")]
    NoPrincipalPart(String),
    #[error("extrapolation did not converge: last correction {correction:e} exceeds {allowed:e}")]
    NonConvergent { correction: f64, allowed: f64 },
    #[error("quadrature tail {tail:e} exceeds tolerance {tol:e}")]
    QuadratureTail { tail: f64, tol: f64 },
    #[error("model has no boundary hyperface")]
    NoBoundary,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("z-grid is not uniform")]
    NonUniformGroupGrid,
    #[error("semiclassical parameter must be positive, got {0}")]
    NonPositiveT(f64),
    #[error("ode integration failed: {0}")]
    Integration(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
