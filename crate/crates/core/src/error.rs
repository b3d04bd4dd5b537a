use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: field `{field}`: {reason}")]
    MalformedRecord {
        line: usize,
        field: String,
        reason: String,
    },

    #[error("duplicate mention id `{0}`")]
    DuplicateMentionId(String),

    #[error("mention `{0}` has no gold cluster label")]
    MissingGoldLabel(String),

    #[error("gold label for unknown mention `{0}`")]
    GoldWithoutMention(String),

    #[error("mention `{mention_id}` references document `{doc_id}` which is not in the document file")]
    DanglingDocument { mention_id: String, doc_id: String },

    #[error("mention `{mention_id}` has no {key} grouping key")]
    MissingGroupKey { mention_id: String, key: &'static str },

    #[error("split selection is empty")]
    EmptySplitSelection,

    #[error("min_count must be at least 1")]
    InvalidMinCount,

    #[error("unknown mention id `{0}`")]
    UnknownMentionId(String),

    #[error("pairs of gold cluster `{0}` are split across groups")]
    InconsistentPairSet(String),

    #[error("threshold grid is empty")]
    EmptyGrid,

    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),

    #[error("no document text for document `{0}`")]
    MissingDocumentText(String),

    #[error("no score for pair `{0}`")]
    MissingPair(String),

    #[error("pair `{0}` scored more than once")]
    DuplicatePair(String),

    #[error("score for unknown pair `{0}`")]
    UnknownPair(String),

    #[error("pair `{pair_id}`: score {value} is outside [0, 1]")]
    ScoreOutOfRange { pair_id: String, value: f64 },

    #[error("key and response cover different mentions")]
    UniverseMismatch,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("edge ({0}, {1}) references a node outside the graph")]
    DanglingEdge(String, String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, field: &str, reason: impl Into<String>) -> Self {
        Error::MalformedRecord {
            line,
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
