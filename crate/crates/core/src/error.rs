use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: required column `{column}` is missing")]
    MissingColumn { column: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at line {line}, column `{column}`: cannot read {value:?} as {expected}")]
    Parse {
        line: usize,
        column: String,
        value: String,
        expected: &'static str,
    },

    #[error("column `{column}` has missing values; impute it before encoding")]
    IncompleteData { column: String },

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("imputation error: {0}")]
    Impute(String),

    #[error("scaling error: column `{column}` is constant")]
    ConstantColumn { column: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("feature selection error: {0}")]
    Selection(String),

    #[error("scoring error: {0}")]
    Scoring(String),

    #[error("validity error: {0}")]
    Validity(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse failure category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Stage { source, .. } => source.class(),
            Error::Config(_) | Error::Json(_) => ErrorClass::Config,
            Error::Numerical(_) | Error::Undefined(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
