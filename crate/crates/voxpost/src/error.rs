use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::nifti::NiftiError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] voxpost_core::Error),

    #[error("{}: {source}", path.display())]
    Nifti { path: PathBuf, source: NiftiError },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("{}: line {line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("layout error: {0}")]
    Layout(String),

    #[error("no cases found under {}", .0.display())]
    EmptyDataset(PathBuf),

    #[error("case {case_id} is missing predictions from: {}", missing.join(", "))]
    IncompleteCase {
        case_id: String,
        missing: Vec<String>,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),

    #[error("{failed} of {total} cases failed")]
    CasesFailed { failed: usize, total: usize },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data error, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Internal(_) => 3,
            _ => 2,
        }
    }
}
