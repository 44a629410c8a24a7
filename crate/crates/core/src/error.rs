use thiserror::Error;

/// Errors raised by the numerical kernels and the problem pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),

    #[error("assumption {assumption} violated: {detail}")]
    Assumption {
        /// Short label of the violated hypothesis, e.g. `(a3)`.
        assumption: &'static str,
        detail: String,
    },

    #[error("singular step matrix at node {node} (eigenvalue estimate {eigenvalue:.6e})")]
    SingularStep { node: usize, eigenvalue: f64 },

    #[error("Picard iteration did not converge in {iterations} iterations (last ratio {last_ratio:.4})")]
    NoConvergence { iterations: usize, last_ratio: f64 },

    #[error("non-finite value at node {node} after iteration {iteration}")]
    NonFinite { node: usize, iteration: usize },

    #[error("problem file: {0}")]
    ProblemFile(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
