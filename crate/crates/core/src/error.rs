use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op}: matrix must be square, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("singular matrix: pivot {magnitude:e} in column {column}")]
    SingularMatrix { column: usize, magnitude: f64 },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The Newton iterate could not be inverted; `A` likely has an eigenvalue
    /// on or near the imaginary axis.
    #[error("singular iterate at step {iteration}")]
    SingularIterate { iteration: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error("iteration diverged at step {iteration} (residual {residual:e})")]
    Diverged { iteration: usize, residual: f64 },

    #[error("residual stagnated at {residual:e} after {iterations} iterations, above tolerance {eps_tol:e}")]
    Stagnated {
        iterations: usize,
        residual: f64,
        eps_tol: f64,
    },

    #[error("dense sign oracle failed: {0}")]
    OracleFailure(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("W12 block is singular; no stabilizing Riccati solution extracted")]
    SingularW12,

    #[error("empty graph")]
    EmptyGraph,

    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Variant name, stable for machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::NotSquare { .. } => "NotSquare",
            Error::InvalidStructure(_) => "InvalidStructure",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::NonPositive { .. } => "NonPositive",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::SingularIterate { .. } => "SingularIterate",
            Error::MaxIterExceeded { .. } => "MaxIterExceeded",
            Error::Diverged { .. } => "Diverged",
            Error::Stagnated { .. } => "Stagnated",
            Error::OracleFailure(_) => "OracleFailure",
            Error::Consistency(_) => "Consistency",
            Error::SingularW12 => "SingularW12",
            Error::EmptyGraph => "EmptyGraph",
            Error::Parse { .. } => "Parse",
            Error::Io(_) => "Io",
        }
    }

    /// True for numerical failures of a well-formed problem, as opposed to
    /// bad input or I/O.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::SingularIterate { .. }
                | Error::MaxIterExceeded { .. }
                | Error::Diverged { .. }
                | Error::Stagnated { .. }
                | Error::OracleFailure(_)
                | Error::Consistency(_)
                | Error::SingularW12
        )
    }
}
