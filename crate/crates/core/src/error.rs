use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A precondition of an operation was violated by its inputs.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An environment/algorithm combination that cannot be played.
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested computation needs data the oracle does not carry.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Sampled data contradicts the oracle (e.g. a predictor beats f*).
    #[error("data inconsistency: {0}")]
    DataInconsistency(String),

    /// Too few usable points for a rate fit.
    #[error("fit infeasible: {0}")]
    FitInfeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        // negated so that NaN fails the check
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err($crate::Error::Contract(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
