use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("registry is empty")]
    EmptyRegistry,

    #[error("duplicate template id {0}")]
    DuplicateTemplateId(u32),

    #[error("template {id}: duplicate (factor, reference) pair ({factor}, {reference}), first used by template {first}")]
    DuplicatePair {
        id: u32,
        first: u32,
        factor: String,
        reference: String,
    },

    #[error("template {id}: unknown slot `{{{slot}}}` in surface text")]
    UnknownSlot { id: u32, slot: String },

    #[error("unknown template id {0}")]
    UnknownTemplateId(u32),

    #[error("record `{student_id}`: {reason}")]
    InvalidRecord { student_id: String, reason: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("record `{0}` has no expert labels")]
    Unlabeled(String),

    #[error("records disagree on week count: expected {expected}, `{student_id}` has {found}")]
    WeekMismatch {
        student_id: String,
        expected: usize,
        found: usize,
    },

    #[error("feature length mismatch: expected {expected}, found {found}")]
    FeatureLength { expected: usize, found: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid chain order: {0}")]
    InvalidPermutation(String),

    #[error("labelset size k = {k} exceeds label count {labels}")]
    LabelsetTooLarge { k: usize, labels: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("real-history chain prediction needs the gold label vector as history")]
    MissingGold,

    #[error("{folds} folds requested but only {records} records available")]
    TooManyFolds { folds: usize, records: usize },

    #[error("paired t-test needs at least 2 paired scores, got {0}")]
    TooFewScores(usize),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("correlation matrix is not positive definite:\n{0}")]
    NotPositiveDefinite(String),

    #[error("registry hash mismatch: model was trained against {expected}, supplied registry hashes to {found}")]
    RegistryMismatch { expected: String, found: String },

    #[error("unsupported model format version `{0}`")]
    UnsupportedFormat(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Everything except I/O failures is a problem with the caller's input.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
