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
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("duplicate date {0}")]
    DuplicateDate(chrono::NaiveDate),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("window start={start} len={len} out of range for series of length {series_len}")]
    WindowOutOfRange {
        start: usize,
        len: usize,
        series_len: usize,
    },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sequence too short: need at least {min}, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("no admissible past segment: {0}")]
    NoAdmissibleSegment(String),
    #[error("zero actual value at index {0}")]
    ZeroActual(usize),
    #[error("optimizer did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error("all ARIMA fits failed: {0}")]
    AllFitsFailed(String),
    #[error("parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < min {
        return Err(Error::TooShort { min, got: x.len() });
    }
    Ok(())
}
