use thiserror::Error;

#[derive(Debug, Error)]
pub enum BmcnnError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Num(#[from] numkit::NumError),
}

pub type BmcnnResult<T> = Result<T, BmcnnError>;
