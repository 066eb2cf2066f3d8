use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration, bad parameters or missing configured files.
    Config,
    /// The data itself is unusable (malformed, empty, inconsistent).
    Data,
}

#[derive(Error, Debug)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {malformed} of {lines} lines are malformed; wrong input format?")]
    MostlyMalformed {
        path: PathBuf,
        malformed: usize,
        lines: usize,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("lexicon term {term:?} conflicts with opposite-polarity term {other:?}")]
    LexiconOverlap { term: String, other: String },

    #[error("negative lexicon is empty")]
    EmptyNegativeLexicon,

    #[error("no documents left to model after pruning")]
    EmptyCorpus,

    #[error("input contains no documents: {0}")]
    NoDocuments(String),

    #[error("need at least 2 documents to split, got {0}")]
    TooFewDocuments(usize),

    #[error("held-out test set has no in-vocabulary tokens")]
    EmptyTestSet,

    #[error("vocabulary mismatch: model built on {expected}, test data uses {found}")]
    VocabularyMismatch { expected: String, found: String },

    #[error("topic {0} has no category mass; documents were not tagged with query categories")]
    MissingCategoryTags(usize),

    #[error("missing artifact {path} (run the `{stage}` stage first)")]
    MissingArtifact { stage: &'static str, path: PathBuf },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("K={k}: {source}")]
    AtTopicCount {
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) => ErrorKind::Config,
            Error::AtTopicCount { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
