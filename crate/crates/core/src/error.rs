use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point theta = {theta} lies within {eps} of a pole")]
    PoleProximity { theta: f64, eps: f64 },

    #[error("grid {n_theta}x{n_phi} is too small (need at least 8x8)")]
    GridTooSmall { n_theta: usize, n_phi: usize },

    #[error("operation expects a {expected} spec, got {found}")]
    ConventionMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("grid shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("density became non-finite at step {step}")]
    NonFiniteDensity { step: usize },

    #[error("SDE state became non-finite (theta = {theta}, phi = {phi})")]
    NonFiniteState { theta: f64, phi: f64 },

    #[error("Bayes update normaliser {normalizer} is degenerate")]
    DegenerateUpdate { normalizer: f64 },

    #[error("particle weights collapsed: effective sample size {ess:.2} < 10")]
    WeightCollapse { ess: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
