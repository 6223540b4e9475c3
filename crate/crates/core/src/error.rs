use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("coefficient validation failed: {0}")]
    Validation(String),
    #[error("no convergence after {iterations} iterations (last increment {increment:e})")]
    Convergence { iterations: usize, increment: f64 },
    #[error("bracket [{lo:e}, {hi:e}] does not straddle the target {target}")]
    Bracket { lo: f64, hi: f64, target: f64 },
    #[error("step size: {0}")]
    StepSize(String),
    #[error("positivity lost: {0}")]
    Positivity(String),
    #[error("regime: {0}")]
    Regime(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("adjoint eigenvalue {adjoint} differs from forward eigenvalue {forward}")]
    AdjointMismatch { forward: f64, adjoint: f64 },
    #[error("level {level} outside the admissible range: {reason}")]
    Level { level: f64, reason: String },
    #[error("configuration errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
