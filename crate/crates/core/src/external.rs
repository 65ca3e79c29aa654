use thiserror::Error;

/// Failure of an injected external component (detector, judge, embedder,
/// reranker, LLM). HTTP adapters map transport problems onto this.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ExternalError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("unexpected response: {0}")]
    BadResponse(String),
}
