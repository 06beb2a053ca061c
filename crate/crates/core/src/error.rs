use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("ill-conditioned inversion (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("not implemented: {0}")]
    Unimplemented(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
