use thiserror::Error;

/// Errors raised anywhere in the assurance engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A factorization or numeric evaluation broke down.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The posterior precision matrix is singular.
    #[error("rank error: {0}")]
    Rank(String),

    /// Inputs have inconsistent shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A scenario or request is incomplete or contradictory.
    #[error("configuration error: {0}")]
    Config(String),

    /// An evaluator failed at a specific sample size.
    #[error("at n = {n}: {source}")]
    AtSampleSize {
        n: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Attach the sample size at which an evaluation failed.
    pub fn at_n(self, n: usize) -> Self {
        Error::AtSampleSize {
            n,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping any sample-size context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSampleSize { source, .. } => source.root(),
            other => other,
        }
    }
}
