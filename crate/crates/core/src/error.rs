use thiserror::Error;

/// Errors produced by the numerical engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergence at step {step}: non-finite iterate")]
    Divergence { step: usize },

    #[error("resource cap exceeded: {what} needs {size}, cap is {cap}")]
    Resource {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("invalid stage: {0}")]
    InvalidStage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(format!($($arg)*)))
    };
}
pub(crate) use bail;
