use alloc::string::String;

/// Errors produced by the analysis stages.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Window or image geometry does not fit.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Not enough rows to estimate a covariance structure.
    #[error("insufficient data: need at least {needed} windows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// A factor image carries no energy outside the DC exclusion zone.
    #[error("degenerate factor: {0}")]
    DegenerateFactor(String),

    /// Iterates stopped being finite.
    #[error("numerical failure at iteration {iteration}: {reason}")]
    Numerical { iteration: usize, reason: String },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
