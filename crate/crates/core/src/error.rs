use thiserror::Error;

/// Errors produced by the numeric kernel and the control-design layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("matrix is singular or ill-conditioned (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("functional undefined: {0}")]
    Domain(String),

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("admissible interval is empty: {0}")]
    EmptyInterval(String),

    #[error("regulator equations unsolvable for agent {agent}: {reason}")]
    RegulatorUnsolvable { agent: usize, reason: String },

    #[error("pair is not stabilizable: {0}")]
    Unstabilizable(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("simulation diverged at tick {tick}")]
    Diverged { tick: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
