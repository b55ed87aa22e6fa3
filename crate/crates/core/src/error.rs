use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),
    #[error("token {token} is out of range for a vocabulary of size {size}")]
    TokenOutOfRange { token: u32, size: usize },
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("cannot normalize an all-zero vector")]
    AllZero,
    #[error("invalid prompt: {0}")]
    InvalidPrompt(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),
    #[error("block of length {len} exceeds the configured maximum {max}")]
    BlockTooLong { len: usize, max: usize },
    #[error("drafted token has zero draft probability")]
    DraftZeroProb,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid decoding config: {0}")]
    InvalidConfig(String),
    #[error("enumeration of {paths} sequences exceeds the limit of {limit}")]
    TooLarge { paths: u128, limit: u128 },
    #[error("trace contains no target calls")]
    EmptyTrace,
    #[error("elapsed time must be positive")]
    ZeroTime,
    #[error("nothing to aggregate")]
    Empty,
    #[error("invalid cost model: {0}")]
    InvalidCost(String),
    #[error("template `{template}` requires field `{field}`")]
    MissingField { template: String, field: String },
    #[error("invalid prompt record `{id}`: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("character {0:?} is not in the tokenizer alphabet")]
    UnknownChar(char),
    #[error("unknown prompt id `{0}`")]
    UnknownPrompt(String),
    #[error("unsupported model format `{0}`")]
    UnsupportedFormat(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json { context: context.into(), source }
    }
}
