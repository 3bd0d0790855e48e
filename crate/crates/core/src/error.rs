use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no spinodal region: G'' >= 0 everywhere")]
    NoSpinodal,

    #[error("no structure: field is constant")]
    NoStructure,

    #[error("stability guard: dt = {dt} exceeds the explicit bound {bound} (use --force-dt to override)")]
    TimeStepTooLarge { dt: f64, bound: f64 },

    #[error("diverged at step {step} (t = {time}): {reason}")]
    Diverged { step: u64, time: f64, reason: String },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("singular normal equations (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("no half-resistance crossing found in R(T) trace")]
    NoCrossing,

    #[error("too few points: {0}")]
    TooFewPoints(String),

    #[error("config line {line}: {key}: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("{}:{line}: {message}", path.display())]
    Csv {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoSpinodal
                | Error::NoStructure
                | Error::TimeStepTooLarge { .. }
                | Error::Diverged { .. }
                | Error::NotConverged { .. }
                | Error::Singular { .. }
                | Error::NoCrossing
        )
    }
}
