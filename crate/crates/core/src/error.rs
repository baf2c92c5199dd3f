use thiserror::Error;

/// Errors raised by the assignment solvers, ingestion and tuning routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability cap must lie in (0, 1], got {0}")]
    InvalidCap(String),

    #[error("probability cap {0} is not representable as a rational with denominator <= {1}")]
    IrrationalCap(String, u64),

    #[error("invalid instance specification: {0}")]
    InvalidSpec(String),

    #[error("invalid perturbation parameter: {0}")]
    InvalidParameter(String),

    #[error("floor(Q * w) is zero: cap {cap} with precision {w} leaves no arcs per pair")]
    CapTooSmall { cap: String, w: u64 },

    #[error("no feasible assignment: {0}")]
    Infeasible(String),

    #[error("perturbation family `{0}` is not differentiable on (0, 1]")]
    NotDifferentiable(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("malformed assignment: {0}")]
    MalformedInput(String),

    #[error("floor exceeds maximum quality: floor {floor} > M = {max}")]
    FloorUnachievable { floor: f64, max: f64 },

    #[error("quality is not monotone in alpha: q({low_alpha}) = {low_quality} < floor <= q({high_alpha}) = {high_quality}")]
    NonMonotoneDetected {
        low_alpha: f64,
        low_quality: f64,
        high_alpha: f64,
        high_quality: f64,
    },

    #[error("decomposition exceeded {limit} components")]
    DecompositionOverrun { limit: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("negative similarity {value} at row {row}, column {column}")]
    NegativeSimilarity { row: usize, column: usize, value: f64 },

    #[error("unknown bid level `{level}` at row {row}")]
    UnknownLevel { level: String, row: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that describe the problem data rather than the invocation.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_)
                | Error::FloorUnachievable { .. }
                | Error::NonMonotoneDetected { .. }
                | Error::CapTooSmall { .. }
                | Error::DecompositionOverrun { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
