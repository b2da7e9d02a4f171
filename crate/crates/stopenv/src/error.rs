use thiserror::Error;

#[derive(Debug, Error)]
pub enum StopError {
    #[error("episode lifecycle error: {0}")]
    Lifecycle(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("probability source error: {0}")]
    Source(String),
}

pub type StopResult<T> = Result<T, StopError>;
