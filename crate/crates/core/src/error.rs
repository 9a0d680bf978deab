use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimators, the search routines and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length {len} not divisible as {k}·{l}")]
    NotDivisible { len: usize, k: usize, l: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("covariance singular; supply alpha > 0")]
    Singular,

    #[error("degenerate leverage h = {value} at sample {index}")]
    DegenerateLeverage { index: usize, value: f64 },

    #[error("leverage ≥ 1 at sample {index} (z = {value}): α too small or N too small for shape")]
    AloLeverage { index: usize, value: f64 },

    #[error("non-finite PRESS value at alpha = {alpha:e}")]
    NonFinitePress { alpha: f64 },

    #[error("non-finite solve updating factor {k} at alpha = {alpha:e}")]
    AlsSolve { k: usize, alpha: f64 },

    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error("every evaluation failed in bracket [{lo:e}, {hi:e}]")]
    SearchFailed { lo: f64, hi: f64 },

    #[error("non-stationary AR coefficient {0}")]
    NonStationary(f64),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
