use thiserror::Error;

/// Errors produced by the library.
///
/// The variants map onto the distinct failure classes surfaced by the CLI:
/// domain (bad arguments), capacity (problem size above an enumeration
/// guard), training (optimization diverged), parse (malformed input files)
/// and plain I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
