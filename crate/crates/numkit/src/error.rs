use thiserror::Error;

/// Errors produced by tensor ops, layers, optimizers and checkpoints.
#[derive(Debug, Error)]
pub enum NumError {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: String, detail: String },

    #[error("invalid argument for {op}: {detail}")]
    InvalidArgument { op: String, detail: String },

    #[error("non-finite value detected in {context}")]
    NonFinite { context: String },

    #[error("NaN gradient in parameter `{name}`")]
    NanGradient { name: String },

    #[error("label row {row} is not one-hot")]
    BadLabel { row: usize },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type NumResult<T> = Result<T, NumError>;

impl NumError {
    pub fn shape(op: &str, detail: impl Into<String>) -> Self {
        NumError::Shape {
            op: op.to_string(),
            detail: detail.into(),
        }
    }

    pub fn invalid(op: &str, detail: impl Into<String>) -> Self {
        NumError::InvalidArgument {
            op: op.to_string(),
            detail: detail.into(),
        }
    }
}
