use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("history is fully masked")]
    EmptyHistory,

    #[error("unknown embedding level {level} (table has {levels} levels)")]
    UnknownLevel { level: usize, levels: usize },

    #[error("parameter {index} has no gradient")]
    MissingGradient { index: usize },

    #[error("{path}: missing column `{column}`")]
    Schema { path: PathBuf, column: String },

    #[error("{path}: no records")]
    NoRecords { path: PathBuf },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}:{line}: duplicate record for company {company}, accident year {accident_year}, lag {lag}")]
    DuplicateRecord {
        path: PathBuf,
        line: u64,
        company: u32,
        accident_year: i32,
        lag: u32,
    },

    #[error("non-positive premium for company {company}, accident year {accident_year}")]
    Normalization { company: u32, accident_year: i32 },

    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("empty {0} split")]
    EmptySplit(&'static str),

    #[error("ensemble member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("forecast missing for company {company}, accident year {accident_year}, lag {lag}")]
    Coverage {
        company: u32,
        accident_year: i32,
        lag: usize,
    },

    #[error("no actual ultimate for company {company}, accident year {accident_year}")]
    MissingActual { company: u32, accident_year: i32 },

    #[error("company {company} missing from {what}")]
    MissingCompany { company: u32, what: &'static str },

    #[error("development factor {from}->{to} undefined: zero cumulative base")]
    UndefinedFactor { from: usize, to: usize },

    #[error("model artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}
