use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A frequency or index lies outside tabulated / representable range.
    #[error("out of range: {0}")]
    Range(String),

    #[error("invalid pulse plan: {0}")]
    InvalidPlan(String),

    #[error("framing error: {0}")]
    Framing(String),

    #[error("degenerate energy model: {0}")]
    DegenerateModel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("experiment produced no decoded bits")]
    NoBits,

    #[error("malformed table: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
