use thiserror::Error;

/// Errors raised by the model, analytics and harness layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{context} is not symmetric positive semi-definite: {detail}")]
    NotPsd { context: String, detail: String },

    #[error("generator is not stable: max real part of spectrum is {max_real_part:e}")]
    Unstable { max_real_part: f64 },

    #[error("{name} = {value} is outside the admissible range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

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

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
