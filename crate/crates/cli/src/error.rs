use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] glvortex::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("corrupt cache entry {0}")]
    CorruptCacheEntry(PathBuf),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit status: 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use glvortex::Error as E;
        match self {
            Self::Usage(_) | Self::Parse { .. } => 2,
            Self::Core(
                E::NonQuantizedFlux { .. }
                | E::InvalidCounts(_)
                | E::InvalidParameter(_)
                | E::DimensionMismatch(_)
                | E::BoxOutOfDomain
                | E::PartitionInvalid(_),
            ) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
