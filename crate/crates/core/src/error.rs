use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid nodes: {0}")]
    InvalidNodes(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("function has zero energy")]
    ZeroEnergy,

    #[error("abscissa {0} outside [0, 1]")]
    OutOfDomain(f64),

    #[error("non-finite exponent at s = {s}")]
    NonFiniteExponent { s: f64 },

    #[error(
        "function has a negative slope on segment {segment}; only monotone inputs are supported"
    )]
    SignChanging { segment: usize },

    #[error("log-domain overflow: {0}")]
    Overflow(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
