use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("time step {dt} violates CFL bound {limit}")]
    StepSize { dt: f64, limit: f64 },

    #[error("shallow-water state lost positivity: min depth {min_depth} at step time {time}")]
    Stability { min_depth: f64, time: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("calibration failed: {message} (bracket [{lo}, {hi}], values [{lo_value}, {hi_value}], target {target})")]
    Calibration {
        message: String,
        lo: f64,
        hi: f64,
        lo_value: f64,
        hi_value: f64,
        target: f64,
    },

    #[error("optimization diverged: {message}; loss trace {trace:?}")]
    Optimization { message: String, trace: Vec<f64> },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: integrity check failed: {message}")]
    Integrity { path: PathBuf, message: String },

    #[error("{path}: unsupported or corrupt image: {message}")]
    Format { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn integrity(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Integrity {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Config(_) | Error::Parameter(_) => 3,
            Error::Calibration { .. } => 4,
            Error::Io { .. } | Error::Integrity { .. } | Error::Format { .. } => 5,
            Error::StepSize { .. }
            | Error::Stability { .. }
            | Error::Optimization { .. }
            | Error::Numerical(_) => 6,
            Error::Shape(_) | Error::Input(_) | Error::Aggregation(_) => 7,
        }
    }
}
