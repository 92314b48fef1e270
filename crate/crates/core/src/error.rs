use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("mode index {index} out of range 1..={n}")]
    ModeIndex { index: usize, n: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("frequency-shift iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("non-finite state at t = {time}")]
    BlowUp { time: f64 },

    /// `line` is 1-based; 0 when the input is not line oriented.
    #[error("parse error: {message}")]
    Parse { line: usize, message: String },
}
