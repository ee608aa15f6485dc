use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum NpeError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values but the grid has {expected} nodes")]
    FieldLength { expected: usize, got: usize },

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("point ({x}, {y}) lies outside the closed domain")]
    DomainViolation { x: f64, y: f64 },

    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),

    #[error("invalid boundary trace: {0}")]
    InvalidBoundary(String),

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("invalid time {0}; must be positive and finite")]
    InvalidTime(f64),

    #[error("series truncated at {modes} modes; tail estimate {tail:e} exceeds 1e-14")]
    Truncation { modes: usize, tail: f64 },

    #[error("expected {expected} concentration fields, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("species {species} went negative ({value:e}) at node {node}")]
    PositivityViolation { species: usize, node: usize, value: f64 },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("check not applicable: {0}")]
    Inapplicable(String),

    #[error("invalid manufactured case: {0}")]
    InvalidCase(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NpeError {
    /// True for errors caused by user input rather than by a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            NpeError::InvalidGrid(_)
                | NpeError::InvalidExponent(_)
                | NpeError::InvalidBoundary(_)
                | NpeError::InvalidTime(_)
                | NpeError::Arity { .. }
                | NpeError::Validation(_)
                | NpeError::Parse { .. }
                | NpeError::Inapplicable(_)
                | NpeError::InvalidCase(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, NpeError>;
