use thiserror::Error;

/// Errors raised by the measure evaluators, samplers and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("inversion failed: {0}")]
    Inversion(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("critical case: {0}")]
    CriticalCase(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable tag, used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Integration(_) => "integration",
            Error::Inversion(_) => "inversion",
            Error::Resource(_) => "resource",
            Error::Overflow(_) => "overflow",
            Error::CriticalCase(_) => "critical_case",
            Error::Config(_) => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 1.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(domain(format!("gamma must lie in (1, 2), got {gamma}")))
    }
}

pub(crate) fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {x}")))
    }
}
