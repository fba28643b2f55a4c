use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A non-finite value or a failed solve. `stage` names where it happened
    /// (layer index, loss term, epoch, solver).
    #[error("numeric failure in {stage}: {detail}")]
    NumericFailure { stage: String, detail: String },

    /// An effective coefficient that is not positive definite.
    #[error("degenerate homogenized model: {0}")]
    DegenerateModel(String),

    /// Cell problem right-hand side without zero average.
    #[error("solvability violated: cell average of the source is {average:e}")]
    Solvability { average: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(stage: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::NumericFailure {
            stage: stage.into(),
            detail: detail.into(),
        }
    }
}
