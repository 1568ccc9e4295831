use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("empty record set")]
    EmptyRecords,

    #[error("domain error: {0}")]
    Domain(String),

    /// Similarity is undefined, e.g. for an item nobody likes.
    #[error("similarity undefined: {0}")]
    Estimation(String),

    #[error("round {round} exceeded {max_hops} hops")]
    ProtocolTimeout { round: u64, max_hops: u64 },

    #[error("unknown party: user {0}")]
    UnknownParty(u32),

    #[error("contract violation: {0}")]
    Contract(String),

    /// Weighted prediction with zero similarity mass.
    #[error("prediction undefined: zero similarity mass for item {0}")]
    UndefinedPrediction(u32),

    #[error("precision undefined: empty recommendation list")]
    UndefinedPrecision,

    #[error("precision loss undefined: baseline precision is zero")]
    UndefinedLoss,

    #[error("item universes differ: {0} vs {1}")]
    MismatchedUniverse(usize, usize),

    #[error("unknown similarity strategy '{0}'")]
    UnknownStrategy(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
