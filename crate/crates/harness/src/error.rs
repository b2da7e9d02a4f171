use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("comparability error: {0}")]
    Comparability(String),

    #[error(transparent)]
    Stop(#[from] stopenv::StopError),

    #[error(transparent)]
    Dqn(#[from] dqn::DqnError),

    #[error(transparent)]
    Bmcnn(#[from] bmcnn::BmcnnError),
}

pub type HarnessResult<T> = Result<T, HarnessError>;
