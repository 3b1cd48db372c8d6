use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evaluation failed at replication {index}: {message}")]
    Evaluation { index: usize, message: String },

    #[error(
        "covariance factorization failed after jitter escalation \
         (final jitter {jitter:.3e}, diagonal range [{diag_min:.3e}, {diag_max:.3e}])"
    )]
    Factorization {
        jitter: f64,
        diag_min: f64,
        diag_max: f64,
    },

    #[error("swarm needs at least 2 particles, got {0}")]
    SwarmTooSmall(usize),

    #[error("swarm has no evaluated particles yet")]
    SwarmNotEvaluated,

    #[error("no tracking samples inside window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },

    #[error("world generation infeasible: {0}")]
    WorldInfeasible(String),

    #[error("planning failed: {0}")]
    PlanFailed(String),

    #[error("long-loop evaluator rejected theta {theta:?}: {message}")]
    LongEvalFailed { theta: Vec<f64>, message: String },

    #[error("too many consecutive long-loop failures ({0}); aborting")]
    LongLoopAborted(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
