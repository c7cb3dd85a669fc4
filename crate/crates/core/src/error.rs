use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("resolvent root search did not converge after {iterations} iterations (x = {x}, delta = {delta})")]
    ResolventNonConvergence { x: f64, delta: f64, iterations: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unsupported graph: {0}")]
    UnsupportedGraph(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear solve broke down: {0}")]
    SolverBreakdown(String),

    #[error("non-finite state on path {path} at step {step}")]
    NonFinite { path: usize, step: usize },

    #[error("Picard iteration on interval {interval} did not converge in {iterations} iterations (last relative difference {last_difference:e})")]
    PicardNonConvergence { interval: usize, iterations: usize, last_difference: f64 },

    #[error("declared noise constant {which} = {declared} is smaller than the empirical value {empirical}")]
    CertificationFailed { which: &'static str, declared: f64, empirical: f64 },

    #[error("incompatible configurations: {0}")]
    Incompatible(String),

    #[error("Fenchel ledger violated on path {path}: ∫j*(ξ) = {conjugate} > ∫ξX = {reaction}")]
    FenchelViolation { path: usize, conjugate: f64, reaction: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }
}
