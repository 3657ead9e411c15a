use alloc::string::String;

/// Errors raised by cone operations, problem construction and the solver.
///
/// Algorithmic outcomes of a solve (stationary points, stalls) are reported
/// through [`crate::solver::Status`], not through this type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("projection onto simplicial cone failed: residual {residual:e} after {iterations} inner iterations")]
    ProjectionFailure { residual: f64, iterations: usize },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
