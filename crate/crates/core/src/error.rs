use thiserror::Error;

/// Errors raised by geometry, quadrature and estimator routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid interval [{lo}, {hi}]: need finite lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("pole {pole} is not strictly inside ({lo}, {hi})")]
    PoleOutside { pole: f64, lo: f64, hi: f64 },

    #[error("integrand returned {value} at x = {at}")]
    Evaluation { at: f64, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(v: f64, what: &'static str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
