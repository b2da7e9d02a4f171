use thiserror::Error;

#[derive(Debug, Error)]
pub enum DqnError {
    #[error("input error: {0}")]
    Input(String),

    #[error("replay buffer holds {len} transitions, need {need}")]
    BufferUnderfull { len: usize, need: usize },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Num(#[from] numkit::NumError),
}

pub type DqnResult<T> = Result<T, DqnError>;
