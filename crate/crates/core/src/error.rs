use thiserror::Error;

pub type Result<T> = std::result::Result<T, ForgeError>;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("unknown {kind} id {id:?}")]
    UnknownId { kind: &'static str, id: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inner trial count {trials} exceeds the cap of {cap}; lower beta (fewer discrimination points) or raise alpha")]
    TrialCap { trials: u64, cap: u64 },

    #[error("no cluster found around subject {subject:?}: every trial fell below the density threshold")]
    NoClusterFound { subject: String },

    #[error("subject {subject:?} shares no present dimension with any other subject")]
    NoSharedDims { subject: String },

    #[error("dimensions {dims:?} are not in the subspace of cluster {cluster:?}")]
    NotInSubspace { cluster: String, dims: Vec<String> },

    #[error("no label metadata for dimension {0:?}")]
    MissingLabel(String),

    #[error("{0}")]
    Empty(String),
}
