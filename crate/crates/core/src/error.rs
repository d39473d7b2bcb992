use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
