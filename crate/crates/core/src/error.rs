use crate::geometry::Vector;
use crate::solver::SelectionFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("compact set must be nonempty")]
    EmptySet,

    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),

    #[error("malformed map: {0}")]
    MalformedMap(String),

    #[error("point {0} matches no region of the table map")]
    NotCovered(Vector),

    #[error("vector {0} is not a member of the given set")]
    NotInSet(Vector),

    #[error("nearest-point iteration did not converge within {iterations} iterations (gap {gap:e})")]
    HullNonConvergence { iterations: usize, gap: f64 },

    #[error("combinatorial budget exceeded: {required} chains requested, cap is {cap}")]
    BudgetExceeded { required: u128, cap: u64 },

    #[error("sequence is not cyclic monotone (first violation at index {0})")]
    NotCyclicMonotone(usize),

    #[error("sequence anchor does not match the family anchor")]
    AnchorMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("velocity selection failed at step {}", .0.step)]
    SelectionFailed(Box<SelectionFailure>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
