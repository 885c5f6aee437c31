use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised across the estimation, diagnostic and simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("missing column `{0}` in input header")]
    Schema(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no discharge records on {0}")]
    Gap(NaiveDate),

    #[error("range error: {0}")]
    Range(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_len(what: &str, len: usize, min: usize) -> Result<()> {
    if len < min {
        return Err(Error::Size(format!(
            "{what} needs at least {min} values, got {len}"
        )));
    }
    Ok(())
}
