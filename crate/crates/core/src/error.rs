use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("duplicate via coordinate ({x}, {y}) at rows {first} and {second}")]
    DuplicateCoordinate {
        x: i64,
        y: i64,
        first: usize,
        second: usize,
    },

    #[error("coordinate ({x}, {y}) of via {index} is negative or exceeds {max}")]
    CoordinateOutOfRange {
        index: usize,
        x: i64,
        y: i64,
        max: i64,
    },

    #[error("invalid technology parameters: {0}")]
    InvalidTech(String),

    #[error("layout fails validation: {count} via pair(s) closer than min_pitch_diff_mask, first {first}")]
    InvalidLayout { count: usize, first: String },

    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),

    #[error("pattern `{pattern}` is invalid: {rule}")]
    InvalidPattern { pattern: String, rule: String },

    #[error("unknown via id {0}")]
    UnknownVia(usize),

    #[error("component of {size} vias exceeds exact limit {limit}")]
    ComponentTooLarge { size: usize, limit: usize },

    #[error("inconsistent eliminator application: {0}")]
    Inconsistent(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("stage `{stage}` failed")]
    Stage {
        stage: &'static str,
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

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
