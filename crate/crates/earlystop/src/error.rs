use thiserror::Error;

/// Exit-code contract: 0 success, 1 internal error, 2 invalid
/// input/config.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidInput(String),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidInput(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> CliError {
        CliError::InvalidInput(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> CliError {
        CliError::Internal(msg.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::InvalidInput(format!("bad JSON: {e}"))
    }
}

impl From<dsp::DspError> for CliError {
    fn from(e: dsp::DspError) -> Self {
        use dsp::DspError;
        match e {
            DspError::Config(_) | DspError::Domain(_) | DspError::Ingestion { .. }
            | DspError::StaleCache { .. } | DspError::Rank(_) | DspError::UnfittedPca => {
                CliError::InvalidInput(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<bmcnn::BmcnnError> for CliError {
    fn from(e: bmcnn::BmcnnError) -> Self {
        use bmcnn::BmcnnError;
        match e {
            BmcnnError::Data(_) | BmcnnError::Shape(_) | BmcnnError::Domain(_)
            | BmcnnError::Checkpoint(_) => CliError::InvalidInput(e.to_string()),
            BmcnnError::Num(inner) => CliError::Internal(inner.to_string()),
        }
    }
}

impl From<stopenv::StopError> for CliError {
    fn from(e: stopenv::StopError) -> Self {
        use stopenv::StopError;
        match e {
            StopError::Config(_) | StopError::Data(_) => CliError::InvalidInput(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<dqn::DqnError> for CliError {
    fn from(e: dqn::DqnError) -> Self {
        use dqn::DqnError;
        match e {
            DqnError::Input(_) | DqnError::Checkpoint(_) => CliError::InvalidInput(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<harness::HarnessError> for CliError {
    fn from(e: harness::HarnessError) -> Self {
        use harness::HarnessError;
        match e {
            HarnessError::Config(_) | HarnessError::Comparability(_) => {
                CliError::InvalidInput(e.to_string())
            }
            HarnessError::Stop(inner) => inner.into(),
            HarnessError::Dqn(inner) => inner.into(),
            HarnessError::Bmcnn(inner) => inner.into(),
        }
    }
}

impl From<numkit::NumError> for CliError {
    fn from(e: numkit::NumError) -> Self {
        CliError::Internal(e.to_string())
    }
}
