use thiserror::Error;

/// Errors produced by the regret laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An index or parameter was outside its valid range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An MDP document or constructor input broke a structural invariant.
    #[error("invalid MDP at {path}: {message}")]
    InvalidMdp { path: String, message: String },

    /// A linear solve or iteration produced an unusable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (last span {span:e}); {advice}")]
    NonConvergence {
        iterations: usize,
        span: f64,
        advice: String,
    },

    /// An observation had zero likelihood under every atom of a belief.
    #[error("inconsistent observation: {0}")]
    Inconsistent(String),

    /// A statistical check had too few samples in some stratum.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// An experiment or CLI configuration was invalid.
    #[error("invalid config at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid_mdp(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidMdp {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied configuration or input files.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidMdp { .. } | Error::Json(_) | Error::Argument(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
