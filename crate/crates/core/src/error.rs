use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("{path}:{line}: {message}")]
    Manifest { path: String, line: usize, message: String },

    #[error("interpolation weight {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),

    #[error("retrieval-based prompting requires an index")]
    MissingIndex,

    #[error("no records usable at beam size {0}")]
    NoUsableRecords(usize),

    #[error("index format: {0}")]
    IndexFormat(String),

    #[error("audio: {0}")]
    Audio(String),

    #[error("missing audio: {0}")]
    MissingAudio(String),

    #[error("combined audio is {seconds:.2} s, over the {limit:.0} s window")]
    DurationBudget { seconds: f64, limit: f64 },

    #[error("unknown provider `{0}`")]
    UnknownProvider(String),

    #[error("provider `{provider}` failed: {detail}")]
    ProviderFailed { provider: String, detail: String },

    #[error("provider `{provider}` timed out after {seconds} s")]
    ProviderTimeout { provider: String, seconds: u64 },

    #[error("provider `{provider}` returned a malformed payload: {detail}")]
    MalformedPayload { provider: String, detail: String },

    #[error("provider `{provider}` has no entry for `{id}`")]
    NotFound { provider: String, id: String },

    #[error("offline mode: no cached value for `{id}` from provider `{provider}`")]
    OfflineMiss { provider: String, id: String },

    #[error("cache conflict for key {0}: stored value differs")]
    CacheConflict(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad user input rather than a failing environment.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InvalidInput(_)
                | Error::Empty(_)
                | Error::DuplicateId(_)
                | Error::Manifest { .. }
                | Error::AlphaOutOfRange(_)
                | Error::MissingIndex
                | Error::NoUsableRecords(_)
                | Error::IndexFormat(_)
                | Error::Audio(_)
                | Error::MissingAudio(_)
                | Error::DurationBudget { .. }
                | Error::UnknownProvider(_)
                | Error::Json(_)
        )
    }
}
