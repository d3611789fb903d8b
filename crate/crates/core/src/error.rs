use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("record {index}: pair (x={x}, y={y}) outside declared range n={n}, m={m}")]
    RecordOutOfRange {
        index: usize,
        x: usize,
        y: usize,
        n: usize,
        m: usize,
    },
    #[error("dataset contains no records")]
    EmptyDataset,
    #[error("empty model: count matrix has no positive entry")]
    EmptyModel,
    #[error("count matrix has an empty row or column; prune it first")]
    NotPruned,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular value decomposition of a {rows}x{cols} matrix did not converge")]
    SvdNoConvergence { rows: usize, cols: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::SvdNoConvergence { .. })
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
