use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("objective or gradient returned a non-finite value at iteration {iteration}")]
    NonFiniteValue { iteration: usize },

    /// The bracket of a one-dimensional search grew past the overflow
    /// threshold, i.e. the objective looks unbounded below along the line.
    #[error("line search diverged: bracket exceeded {bound:e}")]
    LineSearchDivergence { bound: f64 },

    #[error("cone does not provide the requested oracle: {0}")]
    UnsupportedCone(&'static str),

    #[error(
        "eigensolver failed to converge after {iterations} iterations (residual {residual:e})"
    )]
    EigFailure { iterations: usize, residual: f64 },

    #[error("reconstruction rank {rank} requires a sketch width of at least {}, got {width}", rank + 2)]
    RankTooLarge { rank: usize, width: usize },

    #[error("greedy inner solver made no progress")]
    InnerSolverStall,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
