//! Classical model of a triply resonant optical parametric oscillator built
//! from four-wave mixing in a natural-abundance rubidium vapor cell inside a
//! standing-wave cavity.
//!
//! The crate is organised bottom-up:
//!
//! * [`medium`]: Doppler-broadened D2 susceptibility of the ⁸⁵Rb/⁸⁷Rb mixture,
//! * [`cavity`]: round-trip optics, Airy spectra and dispersion-pulled modes,
//! * [`fwm`]: double-Λ parametric gain, threshold and steady-state output,
//! * [`analyzer`]: synthesis of absorption, cavity and scanned Fabry–Perot traces.
//!
//! Frequencies are carried as angular detunings (rad/s) from
//! [`rb_d2::REFERENCE_FREQUENCY`] unless a name says otherwise.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyzer;
pub mod cavity;
mod error;
pub mod faddeeva;
pub mod fwm;
pub mod medium;
pub mod rb_d2;
pub mod roots;
pub mod trace;

pub use error::{Error, Result};

/// Physical constants (SI, CODATA 2018 exact values where defined).
pub mod constants {
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
    pub const PASCAL_PER_TORR: f64 = 101_325.0 / 760.0;
}

/// Converts a cyclic frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(hz: f64) -> f64 {
    std::f64::consts::TAU * hz
}

/// Converts angular frequency in rad/s to cyclic frequency in Hz.
#[inline]
pub fn rad_to_hz(rad: f64) -> f64 {
    rad / std::f64::consts::TAU
}
