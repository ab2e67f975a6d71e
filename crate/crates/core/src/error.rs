use thiserror::Error;

/// Errors raised while building, lifting or solving an MPC problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: String,
        got: String,
    },

    #[error("invalid problem: {0}")]
    Invalid(String),

    #[error("H not coercive: smallest eigenvalue {eps:.3e} <= tolerance {tol:.3e}")]
    NotCoercive { eps: f64, tol: f64 },

    #[error("Lyapunov iteration did not converge (spectral radius {radius:.6} >= 1)")]
    LyapunovDiverged { radius: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("active set is not sufficient: {0}")]
    NotSufficient(String),

    #[error("oracle guard: {0}")]
    Guard(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("integrator step size underflow at t = {t:.6e}")]
    StepUnderflow { t: f64 },

    #[error("closed loop aborted at step {step}: {reason}")]
    ClosedLoop {
        step: usize,
        reason: String,
        /// The solver ran out of KKT solves rather than proving infeasibility.
        budget: bool,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
