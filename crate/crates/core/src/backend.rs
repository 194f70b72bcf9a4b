//! Errors shared by the pluggable backends (QA-SRL parser, phrase provider,
//! fill-mask model) and the helpers used by their file- and HTTP-backed
//! adapters.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    /// Network or process failure; the call may be retried.
    #[error("backend transport failure: {0}")]
    Transport(String),
    /// The backend answered with something that breaks its contract.
    #[error("backend protocol violation: {0}")]
    Protocol(String),
    /// The backend has no answer for this input (e.g. a keyed fixture miss).
    #[error("backend has no entry for {0}")]
    NotFound(String),
    #[error("invalid backend input: {0}")]
    InvalidInput(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_))
    }
}
