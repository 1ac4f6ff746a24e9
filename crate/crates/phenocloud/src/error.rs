use std::path::PathBuf;

/// Errors surfaced by the processing pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PLY at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation requires a non-empty cloud")]
    EmptyCloud,

    #[error("cloud has too few points: need {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("no plane found after {iterations} RANSAC iterations")]
    NoPlaneFound { iterations: usize },

    #[error("no points inside the z band [{z_min}, {z_max}]")]
    EmptyBand { z_min: f64, z_max: f64 },

    #[error("cloud frame is {got}, expected {expected}")]
    FrameMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("convex hull is degenerate: {0}")]
    DegenerateHull(String),

    #[error("degenerate 2D shape: {0}")]
    DegenerateShape(String),

    #[error("no z ordering possible: all node centroids share the same z")]
    NoDagOrder,

    #[error("leaf angle undefined at node {node}: {reason}")]
    AngleUndefined { node: usize, reason: String },

    #[error("cluster {label} cannot be split: {reason}")]
    NoSplit { label: i32, reason: String },

    #[error("label import conflicts with cloud: {} unknown ids (first: {:?})", .offending.len(), .offending.first())]
    ImportConflict { offending: Vec<u32> },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("empty model: no feature was admissible")]
    EmptyModel,

    #[error("cross validation needs at least {folds} rows, got {rows}")]
    FoldError { folds: usize, rows: usize },

    #[error("feature schema mismatch: missing column {0:?}")]
    SchemaError(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
