use thiserror::Error;

/// Errors produced by the tilt-meter models and the analysis chain.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// φ = 0 and k = 0: the dark port is perfectly dark and no photon is detected.
    #[error("no light at the dark port (phi = 0 and k = 0)")]
    NoLight,

    /// The post-selected state is orthogonal to the pre-selected one, so the weak value diverges.
    #[error("post-selection orthogonal to pre-selection (phi = {0} is a multiple of 2*pi)")]
    OrthogonalPostSelection(f64),

    /// The rejection sampler exceeded its attempt budget for a single draw.
    #[error("rejection sampler exhausted {0} attempts for one draw")]
    SamplingExhausted(usize),

    #[error("invalid noise spec: {0}")]
    InvalidNoiseSpec(String),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("invalid spectrum request: {0}")]
    InvalidSpectrum(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}
