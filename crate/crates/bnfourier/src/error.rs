use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node}, row {row}: {msg}")]
    Validation { node: usize, row: usize, msg: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("capacity exceeded: {what} = {value:e} (limit {limit:e})")]
    Capacity { what: String, value: f64, limit: f64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("iteration cap {cap} reached after {iterations} updates: {trace}")]
    IterationCap { cap: u64, iterations: u64, trace: String },

    #[error("config: {path}: {msg}")]
    Config { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
