use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("start point is not strictly inside the enlarged set: max g = {g_max}, slack = {slack}")]
    InfeasibleStart { g_max: f64, slack: f64 },

    #[error("integration step fell below {min_step:e} at t = {t}")]
    StepCollapse { t: f64, min_step: f64 },

    #[error("implicit step did not settle after {iterations} iterations (last change {change:e})")]
    FixedPointDivergence { iterations: usize, change: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxItersExceeded {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("grid search supports at most 3 dimensions, got {0}")]
    DimensionTooLarge(usize),

    #[error("Lyapunov audit needs a fixed-barrier trajectory")]
    ModeMismatch,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("config `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
