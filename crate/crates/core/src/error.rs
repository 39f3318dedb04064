use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(
        "{malformed} of {total} lines malformed (limit {limit_pct}%), first at line {first_line}"
    )]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        first_line: usize,
        limit_pct: f64,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown {kind} `{token}`")]
    UnknownToken { kind: &'static str, token: String },

    #[error("{kind} id {id} out of range (size {size})")]
    UnknownId {
        kind: &'static str,
        id: u32,
        size: usize,
    },

    #[error("cannot sample a negative for the {slot} slot: {reason}")]
    Sampling { slot: &'static str, reason: String },

    #[error("non-finite value in parameter block `{block}` at row {row} after epoch {epoch}")]
    NonFinite {
        block: &'static str,
        row: usize,
        epoch: usize,
    },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("model file: {0}")]
    Format(#[from] FormatError),
}

/// Failures while reading a serialized model.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic bytes (not a model file or wrong format version)")]
    BadMagic,
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("checksum mismatch")]
    Checksum,
    #[error("corrupt payload: {0}")]
    Corrupt(String),
}
