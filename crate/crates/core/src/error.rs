use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants map one-to-one onto the CLI exit codes: usage problems are
/// [`Error::InvalidArgument`], oversized oracle requests are
/// [`Error::ResourceLimit`], and anything that signals a broken convention
/// inside the engines is [`Error::InternalConsistency`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {sites} sites exceeds the oracle cap of {cap}")]
    ResourceLimit { sites: usize, cap: usize },

    #[error("outcome {outcome:+} on site {site} has probability {probability:e}")]
    ZeroProbability { site: usize, outcome: i8, probability: f64 },

    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
