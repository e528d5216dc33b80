use thiserror::Error;

use crate::mesh::Role;

/// Errors raised across the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {0} exceeds the supported maximum of {max}", max = crate::so3::MAX_DEGREE)]
    UnsupportedDegree(u32),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: String, found: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unsupported cell type {found} (only tetrahedra, type 10, are accepted)")]
    CellType { line: usize, found: String },

    #[error("need more than {k} vertices for a {k}-nearest-neighbour graph, found {n}")]
    InsufficientVertices { n: usize, k: usize },

    #[error("mesh has no vertex with role `{0}`")]
    MissingRole(Role),

    #[error("normalization undefined: {0}")]
    UndefinedNormalization(String),

    #[error("non-finite gradient at parameter {index} ({name})")]
    NonFiniteGradient { index: usize, name: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
