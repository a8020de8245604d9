use thiserror::Error;

/// Errors raised while reading, validating or generating meshes.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("vertex index {index} out of range in triangle {triangle} (nv = {nv})")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        nv: usize,
    },
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
    #[error("triangle {index} is inverted or degenerate (signed area {area:e})")]
    InvertedTriangle { index: usize, area: f64 },
    #[error("non-conforming mesh at edge ({v0}, {v1}): {reason}")]
    NonConforming { v0: usize, v1: usize, reason: String },
    #[error("boundary edge ({v0}, {v1}) has an interior-marked endpoint and no explicit marker")]
    UnmarkedBoundary { v0: usize, v1: usize },
    #[error("explicit boundary marker given for ({v0}, {v1}), which is not a boundary edge")]
    NotABoundaryEdge { v0: usize, v1: usize },
    #[error("carving holes disconnects the domain into {components} components")]
    Disconnected { components: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

/// Errors raised by sparse kernels, factorizations and iterative solvers.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),
    #[error("pcg breakdown at iteration {iteration}: curvature {curvature:e}")]
    Breakdown { iteration: usize, curvature: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

/// Errors raised while building the auxiliary hierarchy or transfers.
#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("no auxiliary level has a degree of freedom")]
    NoUsableLevel,
    #[error("auxiliary level {0} is empty after boundary adaptation")]
    EmptyLevel(usize),
    #[error("box tree deeper than {0} levels; the mesh grading is too strong")]
    TooDeep(u32),
    #[error("hanging-node invariant violated at box {box_id}: {count} hanging nodes on one edge")]
    HangingNodes { box_id: usize, count: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("report error: {0}")]
    Report(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Report(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
