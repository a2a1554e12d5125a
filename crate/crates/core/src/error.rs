//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or experiment parameter is outside its admissible range.
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter {
        field: &'static str,
        message: String,
    },

    /// `alpha * xi` left the safe exponent range, so `exp(alpha * xi)` would
    /// overflow or flush to zero and break strict monotonicity of the clock.
    #[error("exponent overflow at grid index {index}: alpha*xi = {value}")]
    ExponentOverflow { index: usize, value: f64 },

    /// The requested grid resolutions are not nested.
    #[error(
        "grid mismatch: fine resolution {fine} is not a multiple of coarse resolution {coarse}"
    )]
    GridMismatch { fine: u32, coarse: u32 },

    /// Fine and coarse quantities were built with different alpha or scheme.
    #[error("integral mismatch: {message}")]
    IntegralMismatch { message: String },

    /// `n * horizon` must be an integer number of grid steps.
    #[error(
        "fractional horizon: n = {n}, horizon = {horizon} does not give an integer step count"
    )]
    FractionalHorizon { n: u32, horizon: f64 },

    /// The clock never reached the target before the horizon cap.
    #[error("horizon cap {cap} exceeded before the clock reached r = {r}; the model may drift down or the cap may be too small")]
    HorizonCapExceeded { cap: f64, r: f64 },

    /// An inversion that was required to succeed reported `reached = false`.
    #[error("inversion did not reach the target r = {r} within the sampled horizon")]
    InversionUnreached { r: f64 },

    /// Not enough data for the requested statistic.
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// The operation is not available for this model or case.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A failure inside the replication harness, tagged with its index.
    #[error("replication {replication}: {source}")]
    Replication {
        replication: u64,
        #[source]
        source: Box<Error>,
    },

    /// I/O failure with the offending path attached.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            message: message.into(),
        }
    }
}
