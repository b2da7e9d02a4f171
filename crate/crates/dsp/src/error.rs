use thiserror::Error;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("ingestion error for `{source_id}`: {detail}")]
    Ingestion { source_id: String, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("PCA is not fitted")]
    UnfittedPca,

    #[error("rank error: {0}")]
    Rank(String),

    #[error("cache entry for `{source_id}` is stale (config hash mismatch)")]
    StaleCache { source_id: String },

    #[error("cache format error: {0}")]
    CacheFormat(String),

    #[error("wav error: {0}")]
    Wav(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type DspResult<T> = Result<T, DspError>;
