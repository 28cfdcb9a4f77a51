use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not reach the requested precision after {iterations} terms: {what}")]
    Convergence { what: String, iterations: usize },

    #[error("evaluation at s = {s} is within the rejection radius of the pole at {pole}")]
    Pole { s: String, pole: f64 },

    #[error("truncation failure: {0}")]
    Truncation(String),

    #[error("enumeration budget of {budget} lattice points exceeded")]
    Budget { budget: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("polarization violation: {0}")]
    Polarization(String),

    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),

    #[error("symmetry precondition violated: {0}")]
    Symmetry(String),

    #[error("fixed-point iteration did not converge in {iterations} steps (last contraction ratio {ratio:.3e})")]
    NonConvergence { iterations: usize, ratio: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
