use std::path::PathBuf;

use thiserror::Error;

/// Coarse error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Model,
}

/// Failures while decoding a dataset file.
#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("row {row}, column {column}: non-numeric value {value:?}")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("row {row}: label {value:?} is not 0 or 1")]
    BadLabel { row: usize, value: String },
    #[error("row {row}: expected {expected} fields, found {found}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("bad magic bytes, expected MFB1")]
    BadMagic,
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing bytes: expected {expected} bytes, found {found}")]
    TrailingBytes { expected: u64, found: u64 },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    ParseBytes(#[from] ParseError),
    #[error("dataset is empty after {0}")]
    EmptyDataset(&'static str),
    #[error("invalid split fractions: {0}")]
    InvalidSplit(String),
    #[error("stratification infeasible: {0}")]
    StratificationInfeasible(String),
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("non-finite feature value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("training data has zero variance")]
    ZeroVariance,
    #[error("AUC is undefined when only one class is present")]
    UndefinedAuc,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("ensemble weights have not been searched")]
    WeightsUnset,
    #[error("all {0} tuner trials failed")]
    AllTrialsFailed(usize),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidSplit(_) | Error::Config(_) | Error::InvalidParameter(_) => {
                ErrorClass::Config
            }
            Error::CorruptBundle(_) | Error::WeightsUnset | Error::Json(_) => ErrorClass::Model,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
