use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single configuration problem, tied to the line it was found on
/// (`line == 0` for whole-file checks).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside {region}")]
    Domain { point: Vec<f64>, region: &'static str },

    #[error("grid under-resolves the oscillations along axis {axis}: need at least {required} nodes, got {actual}")]
    Resolution { axis: usize, required: usize, actual: usize },

    #[error("linear solver stopped after {iterations} iterations with relative residual {residual:e}")]
    Solver { iterations: usize, residual: f64 },

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("invalid thin-domain spec: {0}")]
    Spec(String),

    #[error("wrong homogenization regime: {0}")]
    Regime(String),

    #[error("accuracy target missed: {message} (partial values {values:?}, estimate {estimate:e})")]
    Accuracy { message: String, values: Vec<f64>, estimate: f64 },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("study error: {0}")]
    Study(String),

    #[error("trajectory left the absorbing ball: {0}")]
    Instability(String),

    #[error("bad argument: {0}")]
    Argument(String),

    #[error("assembly failure: {0}")]
    Assembly(String),

    #[error("configuration rejected:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigError>),

    #[error("plot error: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
