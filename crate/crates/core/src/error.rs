use thiserror::Error;

/// Errors raised by model construction, evaluation, and the verification suites.
///
/// Verification *failures* are not errors: they are reported as violations
/// inside the respective report types.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("construction failed: {0}")]
    Construction(String),

    /// The doubling point falls inside the cap or smoothing band.
    #[error("construction failed: doubling point L = {l} does not exceed pi/2")]
    DoublingInsideCap { l: f64 },

    #[error("integration failed at t = {reached}: {reason}")]
    Integration { reached: f64, reason: String },

    #[error("distance search failed: {reason}")]
    Search {
        reason: String,
        best_candidate: Option<f64>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
