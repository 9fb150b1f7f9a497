use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: unipotent matrices need n >= 2")]
    InvalidDimension(usize),

    #[error("generator index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("bracket operands of lengths {outer} and {inner}: {reason}")]
    BracketOperands {
        outer: usize,
        inner: usize,
        reason: &'static str,
    },

    #[error("bracket depth {depth} exhausts vectors of length {len}")]
    DepthExhausted { depth: usize, len: usize },

    #[error("invalid walk parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature did not converge: error estimate {achieved:e} above target {target:e}")]
    QuadratureNonConvergence { achieved: f64, target: f64 },

    #[error("enumeration needs {required} word pairs, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("invariant breach: {0}")]
    InvariantBreach(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}
