use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A caller-side contract between values was broken (e.g. a
    /// demonstration missing from its own sample set).
    #[error("contract violated: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("sampling failed for demonstration {id}: {reason}")]
    SamplingFailure { id: String, reason: String },

    #[error("path smoothing failed: {0}")]
    SmoothingFailure(String),

    #[error("infeasible speed boundary conditions: {0}")]
    Infeasible(String),

    #[error("degenerate hessian: {0}")]
    DegenerateHessian(String),

    #[error("forward optimizer diverged: {0}")]
    Divergence(String),

    #[error("prediction failed: {0}")]
    Prediction(String),
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
