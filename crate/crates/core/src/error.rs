use std::path::PathBuf;

/// Errors raised by grid construction, solvers, diagnostics and IO.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("negative density {value} at node {node}")]
    NegativeDensity { node: usize, value: f64 },
    #[error("density has zero total mass")]
    ZeroMass,
    #[error("field has {got} values, grid expects {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unsupported dimension d = {0} for this operation")]
    UnsupportedDimension(usize),
    #[error("fd_laplacian radius {h_ball} is smaller than the grid spacing {h}")]
    BallTooSmall { h_ball: f64, h: f64 },
    #[error("transport problem has {pairs} pairs, above the exact-solve guard {guard}")]
    GuardExceeded { pairs: usize, guard: usize },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed field file {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
