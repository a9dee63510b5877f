//! Shared error type for the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported dimension {0}, expected 2 or 3")]
    Dimension(usize),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("operator assembly failed: {0}")]
    Assembly(String),

    #[error("well-posedness violated: {0}")]
    IllPosed(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("search failed: {0}")]
    Search(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
