use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlashError {
    /// Caller supplied arguments outside the documented domain.
    #[error("usage: {0}")]
    Usage(String),
    /// Text that could not be parsed into a cell state or variable vector.
    #[error("parse: {0}")]
    Parse(String),
}

impl FlashError {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        FlashError::Usage(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, FlashError>;
