use thiserror::Error;

/// Errors produced by the curvature and regularity machinery.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular tangent space: {0}")]
    Singular(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("degenerate slice: {0}")]
    DegenerateSlice(String),
    #[error("fiber histogram unreliable: {bad} bad samples against {good} good")]
    HistogramUnreliable { bad: usize, good: usize },
    #[error("limit inconclusive: {reason}")]
    InconclusiveLimit {
        reason: String,
        /// Raw `(radius, value, stderr)` triples of the failed profile.
        raw: Vec<(f64, f64, f64)>,
    },
    #[error("projection failed: {0}")]
    Projection(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("blending parameter too large: max field speed {0}")]
    EpsTooLarge(f64),
    #[error("integration failed at s = {s}: {reason}")]
    Integration {
        reason: String,
        s: f64,
        last_state: Vec<f64>,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
