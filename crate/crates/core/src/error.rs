use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("degenerate element {elem}: area {area:e} below floor {floor:e}")]
    DegenerateElement { elem: usize, area: f64, floor: f64 },

    #[error("vertex {0} is disconnected")]
    DisconnectedVertex(usize),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("missing exact data: {0}")]
    MissingExact(&'static str),

    #[error("rank-deficient least-squares fit at vertex {vertex} after exhausting the mesh")]
    RankDeficient { vertex: usize },

    #[error("singular tensor: {0}")]
    SingularTensor(String),

    #[error("no meaningful metric; field is identically zero")]
    ZeroField,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("nothing to emit")]
    NothingToEmit,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
