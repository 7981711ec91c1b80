//! Error type shared by every module in this crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for construction, scoring, solving, and simulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested block length is outside the range an object supports.
    #[error("unsupported block length {n}: {reason}")]
    UnsupportedLength { n: usize, reason: String },

    /// An exhaustive computation would exceed a hard memory or time guard.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// No coupling with the required output marginal meets the distortion
    /// budget; reports the smallest achievable average distortion.
    #[error(
        "distortion budget {requested} is infeasible; the minimum achievable \
         marginal-preserving distortion is {minimum}"
    )]
    InfeasibleDistortion { requested: f64, minimum: f64 },

    /// A numeric routine failed to converge or produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// Shorthand for an [`Error::InvalidInput`] with a formatted message.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
