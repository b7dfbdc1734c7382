use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the process exit codes used by the command-line
/// front end: configuration problems exit with 2, model domain violations
/// with 3, and reconciliation failures with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A profile file, override string, or command argument was malformed
    /// or named an unknown field.
    #[error("configuration error: {0}")]
    Config(String),

    /// A physical parameter was outside the domain of the model
    /// (negative loss, visibility above one, zero detection probability, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Interactive error correction aborted: the estimated error rate was
    /// above the abort threshold (0 rounds), or the keys still differed
    /// after the maximum number of passes.
    #[error("error correction aborted after {rounds} rounds")]
    Reconciliation { rounds: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Domain(_) => 3,
            Error::Reconciliation { .. } => 4,
            Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
