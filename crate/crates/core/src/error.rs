use thiserror::Error;

/// Errors raised by the geometry, metric, capacity and classification routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied parameters outside an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "unknown structure `{0}` (expected euclidean, heisenberg_cc or heisenberg_riemannian)"
    )]
    UnknownStructure(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// The bracket filtration differs between sample points.
    #[error("structure is not equiregular: rank sequence {first:?} at sample 0 but {other:?} at sample {index}")]
    NonEquiregular {
        first: Vec<usize>,
        other: Vec<usize>,
        index: usize,
    },

    #[error("iterated brackets stop growing at rank {rank} < {n}: distribution is not bracket generating")]
    NotBracketGenerating { rank: usize, n: usize },

    #[error("grid too coarse: axis {axis} has {nodes} nodes, need at least {required}")]
    ChartTooCoarse {
        axis: usize,
        nodes: usize,
        required: usize,
    },

    #[error("point {point:?} lies outside the chart")]
    OutsideChart { point: Vec<f64> },

    /// A metric ball or annulus reaches the chart boundary.
    #[error(
        "ball of radius {radius} is clipped by the chart (boundary distance {boundary_distance})"
    )]
    BallClipped { radius: f64, boundary_distance: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The horizontal gradient vanishes on too many nodes for level-set integrals.
    #[error("horizontal gradient degenerate on {fraction:.3} of the nodes (limit {limit})")]
    DegenerateGradient { fraction: f64, limit: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("conformal factor must be positive, found {value} at {point:?}")]
    NonPositiveFactor { value: f64, point: Vec<f64> },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
