use thiserror::Error;

/// Errors surfaced by solvers, validators and experiment runners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ellipticity violation: inf a(x) = {min_a} at x = {at_x} (must be > 0)")]
    EllipticityViolation { min_a: f64, at_x: f64 },

    #[error("invalid domain: x_a = {x_a} must be strictly below x_b = {x_b}")]
    InvalidDomain { x_a: f64, x_b: f64 },

    #[error("mode count {k_modes} exceeds grid_n/4 = {limit} (discrete eigenvalues degrade)")]
    TooManyModes { k_modes: usize, limit: usize },

    #[error("drift-form operator not supported by {operation}")]
    DriftFormRejected { operation: &'static str },

    #[error("eigensolver failed on mode {mode}: residual {residual:.3e} after {iterations} iterations")]
    EigensolveFailure {
        mode: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("singular system: shift delta = {delta} is not invertible on the discrete operator")]
    SingularSystem { delta: f64 },

    #[error("hypothesis {hypothesis} violated: {detail}")]
    HypothesisViolation {
        hypothesis: &'static str,
        detail: String,
    },

    #[error("integration failure at step {step}: {what}")]
    IntegrationFailure { step: usize, what: String },

    #[error("grid mismatch: {detail}")]
    GridMismatch { detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("noise file format error: {0}")]
    NoiseFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
