use thiserror::Error;

/// Errors produced by the simulator and the solvers.
#[derive(Debug, Error)]
pub enum IsacError {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid scenario or solver configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A quadratically constrained problem has an empty feasible set.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// A matrix that must be inverted is numerically singular.
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    /// No design found that meets the radar SCNR threshold.
    #[error("SCNR threshold {required:.4e} unreachable (best found {best:.4e})")]
    ScnrInfeasible { best: f64, required: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IsacError>;
