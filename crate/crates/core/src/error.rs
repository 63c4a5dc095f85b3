use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by graph construction, tree sampling, basis construction
/// and the detection harness.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("graph is disconnected ({} components, sizes {component_sizes:?})", component_sizes.len())]
    Disconnected { component_sizes: Vec<usize> },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("infeasible signal: {0}")]
    InfeasibleSignal(String),
    #[error("least-squares fit undefined: {0}")]
    FitUndefined(String),
    #[error("random walk exceeded {0} steps")]
    WalkLimit(u64),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
