use std::path::{Path, PathBuf};

use kgmap_core::eval::MismatchedDatabase;
use kgmap_core::mapping::InconsistentInputs;

/// Every failure the library reports. [`Error::code`] is the stable,
/// machine-readable name printed by the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    ConfigInvalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    MalformedVocabulary(String),
    #[error("{0}")]
    RemoteUnavailable(String),
    #[error("{0}")]
    DimensionMismatch(String),
    #[error("{0}")]
    CorruptIndexFile(String),
    #[error("{0}")]
    UnreadableDatabase(String),
    #[error("no table named {0}")]
    UnknownTable(String),
    #[error("db_id {0} is not in the manifest")]
    UnknownDbId(String),
    #[error("{0}")]
    MalformedManifest(String),
    #[error("{0}")]
    MalformedAnnotations(String),
    #[error("{0}")]
    BackendUnavailable(String),
    #[error("{agent} agent output rejected after {attempts} attempts: {last_error}")]
    AgentOutputInvalid {
        agent: &'static str,
        attempts: u32,
        last_error: String,
    },
    #[error(transparent)]
    InconsistentInputs(#[from] InconsistentInputs),
    #[error("{0}")]
    MappingNotFound(String),
    #[error("{0}")]
    MalformedMapping(String),
    #[error("{0}")]
    GoldNotFound(String),
    #[error("{0}")]
    MalformedGold(String),
    #[error(transparent)]
    MismatchedDatabase(#[from] MismatchedDatabase),
    #[error("{0}")]
    MaterializeFailed(String),
    #[error("{0}")]
    TranscriptWriteFailed(String),
    #[error("interrupted")]
    Interrupted,
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::Io { .. } => "IoError",
            Error::MalformedVocabulary(_) => "MalformedVocabulary",
            Error::RemoteUnavailable(_) => "RemoteUnavailable",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::CorruptIndexFile(_) => "CorruptIndexFile",
            Error::UnreadableDatabase(_) => "UnreadableDatabase",
            Error::UnknownTable(_) => "UnknownTable",
            Error::UnknownDbId(_) => "UnknownDbId",
            Error::MalformedManifest(_) => "MalformedManifest",
            Error::MalformedAnnotations(_) => "MalformedAnnotations",
            Error::BackendUnavailable(_) => "BackendUnavailable",
            Error::AgentOutputInvalid { .. } => "AgentOutputInvalid",
            Error::InconsistentInputs(_) => "InconsistentInputs",
            Error::MappingNotFound(_) => "MappingNotFound",
            Error::MalformedMapping(_) => "MalformedMapping",
            Error::GoldNotFound(_) => "GoldNotFound",
            Error::MalformedGold(_) => "MalformedGold",
            Error::MismatchedDatabase(_) => "MismatchedDatabase",
            Error::MaterializeFailed(_) => "MaterializeFailed",
            Error::TranscriptWriteFailed(_) => "TranscriptWriteFailed",
            Error::Interrupted => "Interrupted",
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_) => 2,
            _ => 1,
        }
    }
}

impl From<rusqlite::Error> for Error {
    fn from(e: rusqlite::Error) -> Self {
        Error::UnreadableDatabase(e.to_string())
    }
}
