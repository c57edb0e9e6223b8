use thiserror::Error;

/// Errors raised by field construction, differential operators and the
/// solvers built on top of them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a rank-{rank} grid")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("{what}: value {value} at index {index} is outside the admissible domain")]
    Domain {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("shape mismatch: grid holds {expected} points, got {got} values")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid exponent family: {0}")]
    InvalidFamily(String),

    #[error("minimum sits on the search boundary at r = {r} (interval [{lo}, {hi}], objective {objective:e})")]
    BoundaryMinimum {
        r: f64,
        lo: f64,
        hi: f64,
        objective: f64,
    },

    #[error("objective did not decrease under refinement (fine {fine:e}, coarse {coarse:e})")]
    RefinementNotDecreasing { fine: f64, coarse: f64 },

    #[error("coordinate {coord} leaves the grid along axis {axis} (hull [{lo}, {hi}])")]
    OutOfHull {
        axis: usize,
        coord: f64,
        lo: f64,
        hi: f64,
    },

    #[error("four-velocity normalization drifted by {drift:e} at step {step}")]
    NormDrift { step: usize, drift: f64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
