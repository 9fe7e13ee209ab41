use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("aliasing guard failed at t = {time}: exp(-t |xi_max|^alpha) = {residual:e} exceeds {tolerance:e}")]
    AliasingViolation {
        time: f64,
        residual: f64,
        tolerance: f64,
    },
    #[error("no closed form for alpha = {alpha}, epsilon = {epsilon}, dim = {dim}")]
    UnsupportedClosedForm { alpha: f64, epsilon: f64, dim: usize },
    #[error("unsupported order: {0}")]
    UnsupportedOrder(String),
    #[error("quadrature did not converge: relative two-level disagreement {disagreement:.3e}")]
    QuadratureNotConverged { disagreement: f64 },
    #[error("degenerate interval: need 0 < s < t, got s = {s}, t = {t}")]
    DegenerateInterval { s: f64, t: f64 },
    #[error("weighted moment diverges: {0}")]
    MomentDivergence(String),
    #[error("non-positive data in log-log fit at index {0}")]
    NonPositiveData(usize),
    #[error("need at least {needed} points for a fit, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("compensator quadrature failed: {0}")]
    CompensatorQuadratureFailure(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("pair point ({t}, {x:?}) is not on the ensemble lattice")]
    PairOffGrid { t: f64, x: Vec<f64> },
    #[error("ensemble has {got} realizations, need at least {needed}")]
    EnsembleTooSmall { needed: usize, got: usize },
    #[error("empty request: {0}")]
    EmptyRequest(String),
    #[error("cylinder centred at t = {t} contains no admissible points")]
    EmptyCylinder { t: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("radius {radius} exceeds domain diameter {diameter}")]
    RadiusExceedsDiameter { radius: f64, diameter: f64 },
    #[error("point ({t}, {x:?}) lies outside the domain")]
    OutsideDomain { t: f64, x: Vec<f64> },
    #[error("sampling budget {got} below minimum {needed} points per cylinder")]
    SamplingBudgetTooSmall { needed: usize, got: usize },
    #[error("theta = {theta} outside embedding range (1, {upper}] for p = {p}, d = {dim}")]
    ThetaOutOfEmbeddingRange {
        theta: f64,
        p: f64,
        dim: usize,
        upper: f64,
    },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}
