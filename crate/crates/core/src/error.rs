use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("input contains no rows")]
    EmptyInput,

    #[error("column `{0}` has no values")]
    EmptyColumn(String),

    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("record {record}: {reason}")]
    InvalidRecord { record: usize, reason: String },

    #[error("record {record} has a missing value for `{attribute}`")]
    MissingValue { record: usize, attribute: String },

    #[error("sequence shorter than window ({len} records, window {window})")]
    SequenceShorterThanWindow { len: usize, window: usize },

    #[error("invalid window geometry: window {window}, position {position}")]
    InvalidWindow { window: usize, position: usize },

    #[error("classification requires discrete decision (`{0}` is continuous)")]
    NonDiscreteDecision(String),

    #[error("empty training data")]
    EmptyTrainingData,

    #[error("cannot evaluate on empty data")]
    EmptyEvaluationData,

    #[error("record has no column `{0}`")]
    MissingColumn(String),

    #[error("unclassifiable: no conditions")]
    Unclassifiable,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse rule `{line}`: {reason}")]
    RuleSyntax { line: String, reason: String },
}
