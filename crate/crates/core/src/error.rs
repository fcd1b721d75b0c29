use std::path::PathBuf;

use thiserror::Error;

use crate::fields::Grid;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("grid mismatch: {0:?} vs {1:?}")]
    GridMismatch(Grid, Grid),

    #[error("state corruption: {0}")]
    StateCorruption(String),

    #[error("non-positive {quantity} at flat index {index} (value {value:e})")]
    NonPositive {
        quantity: &'static str,
        index: usize,
        value: f64,
    },

    #[error("sign condition violated for boundary.{variable}.alpha_{face} = {alpha}")]
    BoundarySign {
        variable: &'static str,
        face: &'static str,
        alpha: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid constants: {0}")]
    Constants(String),

    #[error("saturation closure rejected: {0}")]
    Closure(String),

    #[error("Picard iteration did not converge in {iterations} iterations (last increment {last:e}, first {first:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        first: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("bad snapshot {path}: {msg}")]
    Snapshot { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by user input rather than by the run itself.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Grid(_)
                | Error::BoundarySign { .. }
                | Error::InvalidArgument(_)
                | Error::Constants(_)
                | Error::Closure(_)
                | Error::Config { .. }
        )
    }
}
