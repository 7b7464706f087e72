use thiserror::Error;

pub type Result<T> = std::result::Result<T, SocoError>;

#[derive(Debug, Error)]
pub enum SocoError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no {degree}-regular graph on {nodes} nodes")]
    InfeasibleGraph { nodes: usize, degree: usize },

    #[error("missing auxiliary variable for edge ({0}, {1})")]
    MissingEdgeVariable(usize, usize),

    #[error("spectral matrix of dimension {0} exceeds the dense eigensolver guard")]
    DimensionOverflow(usize),

    #[error("contraction rate undefined: sigma {sigma} must lie in (0, 4*beta*l = {limit})")]
    ContractionUndefined { sigma: f64, limit: f64 },

    #[error("iterative solve did not converge within {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("unsupported cost: {0}")]
    UnsupportedCost(String),

    #[error("local prox failed: {0}")]
    ProxFailure(String),

    #[error("LPC requires a static graph; round {0} differs from round 0")]
    DynamicGraph(usize),

    #[error("locality violation: {0}")]
    LocalityViolation(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
