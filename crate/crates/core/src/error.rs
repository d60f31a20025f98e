use thiserror::Error;

/// Errors produced by the reconstruction pipeline and its stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains no points")]
    EmptyInput,
    #[error("need more than {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
    #[error("label count {labels} does not match point count {points}")]
    LabelMismatch { labels: usize, points: usize },
    #[error("face {face} references vertex {vertex}, but only {count} vertices exist")]
    InvalidIndex { face: usize, vertex: usize, count: usize },
    #[error("face {0} repeats a vertex index")]
    DegenerateFace(usize),
    #[error("edge ({0}, {1}) has more than two incident faces")]
    NonManifoldEdge(usize, usize),
    #[error("vertex {0} joins more than one fan of faces")]
    NonManifoldVertex(usize),
    #[error("faces cannot be consistently oriented (non-orientable component)")]
    OrientationError,
    #[error("target of {target} points exceeds the {available} available; up-sample first")]
    TargetExceedsInput { target: usize, available: usize },
    #[error("quota {quota} exceeds box population {population}")]
    QuotaExceedsPopulation { quota: usize, population: usize },
    #[error("meshing failed: {0}")]
    MeshingFailed(String),
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("input mesh is not a 2-manifold: {0}")]
    NonManifoldInput(String),
    #[error("MLS projection did not converge for {failed} of {total} vertices")]
    ProjectionUnstable { failed: usize, total: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
