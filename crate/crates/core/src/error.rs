use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("dead-end token {word:?} at position {position}: no hypothesis has positive probability")]
    DeadEnd { position: usize, word: String },

    #[error("sentence {sentence}: {source}")]
    Sentence {
        sentence: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sentence {sentence} has zero likelihood under the model")]
    ZeroLikelihood { sentence: usize },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("degenerate chosen hypothesis (probability 0)")]
    DegenerateHypothesis,

    #[error("threshold {value} out of range for measure {measure}")]
    InvalidThreshold { measure: &'static str, value: f64 },

    #[error("no ambiguous tokens")]
    NoAmbiguousTokens,

    #[error("no {0} observations")]
    EmptySubpopulation(&'static str),

    #[error("target unachievable: {target}")]
    TargetUnachievable { target: f64 },

    #[error("rate {0} is undefined (zero denominator)")]
    UndefinedRate(&'static str),

    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_sentence(self, sentence: usize) -> Self {
        Error::Sentence {
            sentence,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
