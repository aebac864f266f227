use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An integer argument is outside its admissible range.
    #[error("range error: {0}")]
    Range(String),

    /// A real argument is outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request exceeds a configured computation ceiling.
    #[error("resource error: {0}")]
    Resource(String),

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
