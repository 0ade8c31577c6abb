use thiserror::Error;

use crate::types::{InventorId, PatentId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{file}:{line}:{column}: {message}")]
    Parse { file: String, line: u64, column: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("patent {0} has an empty inventor set")]
    EmptyTeam(PatentId),

    #[error("inventor {0} is not in the collaboration graph")]
    UnknownInventor(InventorId),

    #[error("no stock value recorded for inventor {0}")]
    MissingStock(InventorId),

    #[error("rank-deficient design; collinear columns: {}", .0.join(", "))]
    Collinear(Vec<String>),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Collinear(_) | Error::Estimation(_) => 4,
            _ => 3,
        }
    }
}
