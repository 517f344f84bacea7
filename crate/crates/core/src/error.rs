use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The request is well-formed but beyond what this build supports.
    #[error("unsupported: {0}")]
    Capability(String),

    #[error("not found: {0}")]
    NotFound(String),

    /// The covariance matrix could not be factorized at any rung of the
    /// nugget ladder.
    #[error("surrogate failure: covariance not factorizable with nugget ratios {nuggets:?}")]
    SurrogateFailure { nuggets: Vec<f64> },

    #[error("group {0} has fewer than three successful runs")]
    ExcludedGroup(String),

    #[error("no data: {0}")]
    NoData(String),

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid record: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid plan: {0}")]
    Plan(String),

    /// A results store is malformed or belongs to another configuration.
    #[error("invalid store: {0}")]
    Store(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn at_path(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Path {
            path: path.into(),
            source,
        }
    }
}
