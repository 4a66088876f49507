//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input line in a corpus, terminology, or synset file.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),

    /// A gold span that violates document bounds or the task schema.
    #[error("invalid span [{start}, {end}) class {class} in document `{doc_id}`: {msg}")]
    InvalidSpan {
        doc_id: String,
        start: usize,
        end: usize,
        class: i64,
        msg: String,
    },

    #[error("overlapping gold spans of different classes in document `{doc_id}`: [{a_start}, {a_end}) class {a_class} vs [{b_start}, {b_end}) class {b_class}")]
    OverlappingSpans {
        doc_id: String,
        a_start: usize,
        a_end: usize,
        a_class: usize,
        b_start: usize,
        b_end: usize,
        b_class: usize,
    },

    #[error("unmapped semantic type `{0}`")]
    UnmappedSemanticType(String),

    #[error("labeling function `{lf}` emitted {got} votes for {expected} tokens (doc `{doc_id}`, sentence {sentence})")]
    LfLengthMismatch {
        lf: String,
        doc_id: String,
        sentence: usize,
        got: usize,
        expected: usize,
    },

    #[error("entity span tokens [{start}, {end}) out of bounds for document `{doc_id}`")]
    EntityOutOfBounds {
        doc_id: String,
        start: usize,
        end: usize,
    },

    #[error("label model: {0}")]
    LabelModel(String),

    #[error("end model: {0}")]
    EndModel(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("bad file format in {path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
