use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("split fractions must be non-negative and sum to 1 (got {0}, {1}, {2})")]
    BadFractions(f64, f64, f64),

    #[error("regime {regime} cannot be used with a {kind} model")]
    IncompatibleRegime { regime: String, kind: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
