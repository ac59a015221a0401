use thiserror::Error;

/// Errors raised by the coefficient algebra, the integrators and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("coefficient map covers order {covered}, order {requested} requested")]
    Coverage { covered: usize, requested: usize },

    #[error("inconsistent method: a(•) = {0}, expected 1")]
    InconsistentMethod(String),

    #[error("integration diverged at step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
