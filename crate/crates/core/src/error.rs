use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Faddeeva function requires Im(z) >= 0, got Im(z) = {0}")]
    LowerHalfPlane(f64),

    #[error("temperature {0} K is outside the vapor-pressure correlation window (250 K, 500 K)")]
    TemperatureOutOfRange(f64),

    #[error("unknown isotope tag {0:?}")]
    UnknownIsotope(String),

    #[error("isotope list is empty")]
    NoIsotopes,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("target finesse {target} is unattainable (lossless finesse {lossless})")]
    UnattainableFinesse { target: f64, lossless: f64 },

    #[error("no cavity resonance between {lo:e} and {hi:e} rad/s")]
    NoResonance { lo: f64, hi: f64 },

    #[error("root is not bracketed: f({lo:e}) = {f_lo:e}, f({hi:e}) = {f_hi:e}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("steady state did not converge after {iterations} iterations (bracket width {width:e} W, residual {residual:e} W)")]
    NoConvergence { iterations: usize, width: f64, residual: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
