//! File formats, timing experiments and the `pgsearch` command-line tool
//! built on [`pgsearch_core`].

pub mod io;
pub mod timing;

use std::path::PathBuf;

pub use pgsearch_core as core;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// `row` and `column` are zero-based grid coordinates.
    #[error("{}: row {row}, column {column}: {message}", path.display())]
    Parse { path: PathBuf, row: usize, column: usize, message: String },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] pgsearch_core::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
