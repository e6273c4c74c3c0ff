use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice size N={0} (need N >= 3)")]
    InvalidSize(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("correlation is not defined on the diagonal for this model (c + d = 0)")]
    DiagonalUndefined,
    #[error("closed form unavailable: {0}")]
    Unsupported(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
