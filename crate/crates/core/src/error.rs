use crate::expr::{EvalError, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    /// Two independent routes to the same verdict disagreed.
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
