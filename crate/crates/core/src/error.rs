use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("functional not defined for this observation type: {0}")]
    Unsupported(String),

    #[error("too many unusable draws: {unusable} of {total}")]
    TooManyUnusable { unusable: usize, total: usize },

    #[error("chain failure: {0}")]
    ChainFailure(String),

    #[error("grid too narrow: {boundary_mass:.4} of the mass sits at the grid boundary")]
    GridTooNarrow { boundary_mass: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
