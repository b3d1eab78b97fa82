use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must be at least 2x2, got {rows}x{cols}")]
    GridTooSmall { rows: usize, cols: usize },

    #[error("phase {value} at ({row}, {col}) is outside [0, 1)")]
    PhaseOutOfRange { row: usize, col: usize, value: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(f64),

    #[error("phase difference {0} is outside (-1, 1)")]
    DifferenceOutOfRange(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("shift value {0} is outside {{-1, 0, 1}}")]
    InvalidShift(i8),

    #[error("shift field has {0} curl violation(s); integration refused")]
    CurlViolations(usize),

    #[error("invalid belief triple at {edge}: {reason}")]
    InvalidBelief { edge: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("grid has {edges} edges; exhaustive enumeration is limited to {max}")]
    GridTooLarge { edges: usize, max: usize },

    #[error("least-squares solver stopped after {iterations} iterations with relative residual {residual:e}")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("surface step {step} between ({row}, {col}) and its {direction} neighbour needs a shift outside {{-1, 0, 1}}")]
    NotSmooth {
        row: usize,
        col: usize,
        direction: &'static str,
        step: f64,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
