//! Parsers and writers for the TREC-ecosystem file formats: qrels, runs,
//! topics, and a JSON-lines passage corpus.
//!
//! All parsed types are immutable once built and safe to share across
//! threads. Parsing is locale-independent: grades and scores go through
//! `str::parse`, which never consults the environment.

mod corpus;
mod grade;
mod qrels;
mod run;
mod topics;

pub use corpus::{CorpusFields, PassageCorpus};
pub use grade::{Grade, GradeOutOfRange};
pub use qrels::{DupPolicy, LabelHistogram, Qrels, QrelsStats};
pub use run::{RunEntry, RunList, RunParse, RunParseOptions};
pub use topics::Topics;

/// Errors raised while parsing or constructing the TREC data types.
///
/// Line numbers are 1-based and refer to the input stream being parsed.
#[derive(Debug, thiserror::Error)]
pub enum TrecError {
    #[error("line {line}: expected {expected} whitespace-separated fields, found {found}")]
    FieldCount {
        line: usize,
        expected: &'static str,
        found: usize,
    },
    #[error("line {line}: grade {token:?} is not an integer")]
    GradeNotInteger { line: usize, token: String },
    #[error("line {line}: {source}")]
    GradeRange {
        line: usize,
        #[source]
        source: GradeOutOfRange,
    },
    #[error(
        "line {line}: duplicate judgment for topic {topic:?} passage {passage:?} \
         (first seen on line {first_line})"
    )]
    DuplicateJudgment {
        line: usize,
        first_line: usize,
        topic: String,
        passage: String,
    },
    #[error("invalid {what} id {id:?}: must be non-empty and contain no whitespace")]
    InvalidId { what: &'static str, id: String },
    #[error("line {line}: rank {token:?} is not a positive integer")]
    InvalidRank { line: usize, token: String },
    #[error("line {line}: score {token:?} is not a number")]
    InvalidScore { line: usize, token: String },
    #[error("line {line}: passage {passage:?} listed twice for topic {topic:?}")]
    DuplicateRunPassage {
        line: usize,
        topic: String,
        passage: String,
    },
    #[error("topic {topic:?}: rank {rank} assigned to more than one passage")]
    DuplicateRank { topic: String, rank: u32 },
    #[error("line {line}: run tag {found:?} differs from earlier tag {expected:?}")]
    MixedTags {
        line: usize,
        expected: String,
        found: String,
    },
    #[error(
        "topic {topic:?}: score rises from {prev} to {next} between ranks {prev_rank} and {next_rank}"
    )]
    ScoreOrder {
        topic: String,
        prev_rank: u32,
        next_rank: u32,
        prev: f64,
        next: f64,
    },
    #[error("line {line}: missing tab separator between topic id and query")]
    MissingTab { line: usize },
    #[error("line {line}: empty query for topic {topic:?}")]
    EmptyQuery { line: usize, topic: String },
    #[error("duplicate topic {topic:?} on lines {first_line} and {line}")]
    DuplicateTopic {
        line: usize,
        first_line: usize,
        topic: String,
    },
    #[error("line {line}: malformed corpus record: {reason}")]
    CorpusRecord { line: usize, reason: String },
    #[error("line {line}: duplicate passage id {id:?} in corpus")]
    DuplicateCorpusId { line: usize, id: String },
    #[error("passage {id:?} not found in corpus")]
    PassageNotFound { id: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Checks the id shape shared by topics, passages, and run tags.
pub(crate) fn validate_id(what: &'static str, id: &str) -> Result<(), TrecError> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(TrecError::InvalidId {
            what,
            id: id.to_string(),
        });
    }
    Ok(())
}
