//! Standing-wave cavity around the vapor cell.
//!
//! Frequencies are detunings Δ (rad/s) from the reference ω_ref. The round
//! trip phase is
//!
//! ```text
//! φ(Δ) = 2π·frac(2Lν_ref/c) + 2ω_ref·δL/c + 2(L + δL)·Δ/c + (2L_cell/c)(ω_ref + Δ)(n(Δ) − 1)
//! ```
//!
//! where δL is the piezo length offset. Splitting off the integer number of
//! optical cycles keeps φ accurate to ~1e-10 rad. The round-trip amplitude
//! survival is `ρ = √(R1R2)·a_x·e^(−αL_cell)`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::SPEED_OF_LIGHT;
use crate::medium::{reference_omega, Medium};
use crate::rb_d2::REFERENCE_FREQUENCY;
use crate::roots::{bisect, brent};
use crate::trace::SpectrumTrace;
use crate::{hz_to_rad, Error, Result};

/// Finesse used to calibrate the default excess loss.
pub const DEFAULT_FINESSE: f64 = 20.0;

/// Phase tolerance for returned resonances (rad).
pub const PHASE_TOLERANCE: f64 = 1e-9;

/// Below this round-trip survival the Airy peak is shallower than its own
/// half-maximum depth and no linewidth exists.
pub fn resolvable_survival() -> f64 {
    3.0 - 2.0 * 2f64.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavityGeometry {
    /// m
    pub length: f64,
    /// m
    pub cell_length: f64,
    pub r1: f64,
    pub r2: f64,
    /// a_x, amplitude survival per round trip from non-mirror losses.
    pub excess_survival: f64,
    /// δL, m
    pub pzt_offset: f64,
}

impl Default for CavityGeometry {
    fn default() -> Self {
        let (r1, r2) = (0.90, 0.995);
        CavityGeometry {
            length: 0.177,
            cell_length: 0.075,
            r1,
            r2,
            excess_survival: calibrate_excess_loss(r1, r2, DEFAULT_FINESSE)
                .expect("default finesse is attainable"),
            pzt_offset: 0.0,
        }
    }
}

impl CavityGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(Error::invalid("length", "must be positive"));
        }
        if !(self.cell_length >= 0.0 && self.cell_length < self.length) {
            return Err(Error::invalid("cell_length", "must lie in [0, length)"));
        }
        for (name, r) in [("R1", self.r1), ("R2", self.r2)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::invalid(name, format!("{r} outside (0, 1]")));
            }
        }
        if !(self.excess_survival > 0.0 && self.excess_survival <= 1.0) {
            return Err(Error::invalid("excess_survival", "must lie in (0, 1]"));
        }
        if !self.pzt_offset.is_finite() {
            return Err(Error::invalid("pzt_offset", "must be finite"));
        }
        Ok(())
    }

    pub fn t1(&self) -> f64 {
        1.0 - self.r1
    }

    pub fn t2(&self) -> f64 {
        1.0 - self.r2
    }

    /// √(R1R2)
    pub fn mirror_survival(&self) -> f64 {
        (self.r1 * self.r2).sqrt()
    }

    /// Round-trip amplitude survival without the medium.
    pub fn bare_survival(&self) -> f64 {
        self.mirror_survival() * self.excess_survival
    }

    pub fn with_pzt_offset(&self, pzt_offset: f64) -> Self {
        CavityGeometry { pzt_offset, ..self.clone() }
    }
}

/// c/2L (Hz).
pub fn empty_fsr(geometry: &CavityGeometry) -> f64 {
    SPEED_OF_LIGHT / (2.0 * geometry.length)
}

/// Finesse π√ρ/(1 − ρ) of a round-trip amplitude survival ρ.
pub fn finesse_of_survival(rho: f64) -> f64 {
    PI * rho.sqrt() / (1.0 - rho)
}

/// Finesse of the empty (atom-free) cavity.
pub fn finesse(geometry: &CavityGeometry) -> f64 {
    finesse_of_survival(geometry.bare_survival())
}

/// Empty-cavity half width at half maximum, FSR/(2F) (Hz).
pub fn hwhm(geometry: &CavityGeometry) -> f64 {
    empty_fsr(geometry) / (2.0 * finesse(geometry))
}

/// Excess amplitude survival `a_x` giving the target finesse with mirrors R1, R2.
pub fn calibrate_excess_loss(r1: f64, r2: f64, target_finesse: f64) -> Result<f64> {
    for (name, r) in [("R1", r1), ("R2", r2)] {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::invalid(name, format!("{r} outside (0, 1]")));
        }
    }
    if !(target_finesse > 0.0) || !target_finesse.is_finite() {
        return Err(Error::invalid("target_finesse", "must be positive and finite"));
    }
    let mirrors = (r1 * r2).sqrt();
    let lossless = finesse_of_survival(mirrors);
    // Perfect mirrors are treated as an infinite-finesse reference, not calibrated.
    if mirrors >= 1.0 || !(target_finesse < lossless) {
        return Err(Error::UnattainableFinesse { target: target_finesse, lossless });
    }
    // F(1 − s²) = πs with s = √ρ
    let f = target_finesse;
    let s = (-PI + (PI * PI + 4.0 * f * f).sqrt()) / (2.0 * f);
    Ok(s * s / mirrors)
}

/// Fraction T1/(1 − ρ²) of intracavity loss leaving through the input coupler.
pub fn escape_efficiency(geometry: &CavityGeometry) -> f64 {
    let rho = geometry.bare_survival();
    geometry.t1() / (1.0 - rho * rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTrip {
    /// φ, rad (not wrapped)
    pub phase: f64,
    /// ρ, amplitude
    pub survival: f64,
    /// dφ/dΔ, s
    pub phase_slope: f64,
}

impl RoundTrip {
    /// Phase wrapped into (−π, π].
    pub fn wrapped_phase(&self) -> f64 {
        wrap_phase(self.phase)
    }

    /// Normalized Airy factor (1−ρ)²/((1−ρ)² + 4ρ sin²(φ/2)), peak 1.
    pub fn airy_factor(&self) -> f64 {
        let rho = self.survival;
        let num = (1.0 - rho) * (1.0 - rho);
        num / (num + 4.0 * rho * (0.5 * self.phase).sin().powi(2))
    }

    /// Airy denominator (1−ρ)² + 4ρ sin²(φ/2).
    pub fn airy_denominator(&self) -> f64 {
        let rho = self.survival;
        (1.0 - rho) * (1.0 - rho) + 4.0 * rho * (0.5 * self.phase).sin().powi(2)
    }

    /// Phase half-width at half maximum of the local Airy peak (rad); π when
    /// the peak is too lossy to have one.
    pub fn phase_half_width(&self) -> f64 {
        let arg = (1.0 - self.survival) / (2.0 * self.survival.sqrt());
        if arg <= 1.0 {
            2.0 * arg.asin()
        } else {
            PI
        }
    }
}

/// Wraps into (−π, π].
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase - TAU * (phase / TAU).round();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

fn base_phase(geometry: &CavityGeometry) -> f64 {
    let cycles = 2.0 * geometry.length * REFERENCE_FREQUENCY / SPEED_OF_LIGHT;
    TAU * cycles.fract()
}

/// Round-trip phase, survival and phase slope at detuning Δ.
pub fn round_trip<M: Medium + ?Sized>(detuning: f64, geometry: &CavityGeometry, medium: &M) -> RoundTrip {
    let c = SPEED_OF_LIGHT;
    let omega = reference_omega() + detuning;
    let chi = medium.susceptibility(detuning);
    let slope = medium.susceptibility_slope(detuning);
    let cell = 2.0 * geometry.cell_length / c;
    let n_minus_1 = 0.5 * chi.re;
    let alpha = omega / c * chi.im;
    let phase = base_phase(geometry)
        + 2.0 * reference_omega() * geometry.pzt_offset / c
        + 2.0 * (geometry.length + geometry.pzt_offset) * detuning / c
        + cell * omega * n_minus_1;
    let phase_slope = 2.0 * (geometry.length + geometry.pzt_offset) / c
        + cell * (n_minus_1 + omega * 0.5 * slope.re);
    RoundTrip {
        phase,
        survival: geometry.bare_survival() * (-alpha * geometry.cell_length).exp(),
        phase_slope,
    }
}

/// Intensity transmission T1·T2·(ρ/√(R1R2)) / ((1−ρ)² + 4ρ sin²(φ/2)).
pub fn transmission<M: Medium + ?Sized>(detuning: f64, geometry: &CavityGeometry, medium: &M) -> f64 {
    let rt = round_trip(detuning, geometry, medium);
    geometry.t1() * geometry.t2() * (rt.survival / geometry.mirror_survival()) / rt.airy_denominator()
}

/// Transmission on `n` points spanning `[start_hz, stop_hz]` (detuning from the reference).
pub fn transmission_spectrum<M: Medium + ?Sized>(
    start_hz: f64,
    stop_hz: f64,
    n: usize,
    geometry: &CavityGeometry,
    medium: &M,
) -> Result<SpectrumTrace> {
    geometry.validate()?;
    SpectrumTrace::sample("frequency_hz", start_hz, stop_hz, n, |f| {
        transmission(hz_to_rad(f), geometry, medium)
    })
}

/// Piezo offset that makes the cavity resonant at `detuning`, chosen as the
/// smallest correction to the current offset.
pub fn lock_pzt<M: Medium + ?Sized>(detuning: f64, geometry: &CavityGeometry, medium: &M) -> f64 {
    let omega = reference_omega() + detuning;
    let mut g = geometry.clone();
    for _ in 0..8 {
        let err = wrap_phase(round_trip(detuning, &g, medium).phase);
        if err.abs() < 1e-13 {
            break;
        }
        g.pzt_offset -= err * SPEED_OF_LIGHT / (2.0 * omega);
    }
    g.pzt_offset
}

/// Cavity geometry locked to resonance at `detuning`.
pub fn locked<M: Medium + ?Sized>(detuning: f64, geometry: &CavityGeometry, medium: &M) -> CavityGeometry {
    geometry.with_pzt_offset(lock_pzt(detuning, geometry, medium))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    /// rad/s from the reference
    pub detuning: f64,
    /// Integer m with φ = 2πm at the mode.
    pub order: i64,
    pub survival: f64,
    /// dφ/dΔ at the mode, s
    pub phase_slope: f64,
    /// Half width at half maximum, rad/s (infinite for unresolvable modes).
    pub half_width: f64,
}

impl Mode {
    pub fn is_resolvable(&self) -> bool {
        self.survival > resolvable_survival()
    }
}

/// Resonances in increasing frequency.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ModeList {
    pub modes: Vec<Mode>,
}

impl ModeList {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.detuning).collect()
    }

    /// Mode closest to `detuning`.
    pub fn nearest(&self, detuning: f64) -> Option<&Mode> {
        let i = self.modes.partition_point(|m| m.detuning < detuning);
        let lo = i.checked_sub(1).map(|j| &self.modes[j]);
        let hi = self.modes.get(i);
        match (lo, hi) {
            (Some(a), Some(b)) => {
                if detuning - a.detuning <= b.detuning - detuning {
                    Some(a)
                } else {
                    Some(b)
                }
            }
            (a, b) => a.or(b),
        }
    }
}

fn make_mode<M: Medium + ?Sized>(detuning: f64, geometry: &CavityGeometry, medium: &M) -> Mode {
    let rt = round_trip(detuning, geometry, medium);
    let half = rt.phase_half_width();
    Mode {
        detuning,
        order: (rt.phase / TAU).round() as i64,
        survival: rt.survival,
        phase_slope: rt.phase_slope,
        half_width: if half < PI { half / rt.phase_slope.abs() } else { f64::INFINITY },
    }
}

fn roots_on_piece<M: Medium + ?Sized>(
    a: f64,
    b: f64,
    phi_a: f64,
    phi_b: f64,
    geometry: &CavityGeometry,
    medium: &M,
    out: &mut Vec<f64>,
) -> Result<()> {
    let (lo, hi) = (phi_a.min(phi_b), phi_a.max(phi_b));
    let m_lo = (lo / TAU).ceil() as i64;
    let m_hi = (hi / TAU).floor() as i64;
    for m in m_lo..=m_hi {
        let target = TAU * m as f64;
        // Roots sitting on the right end are collected by the next piece.
        if target == phi_b && target != phi_a {
            continue;
        }
        let f = |x: f64| round_trip(x, geometry, medium).phase - target;
        let x = if target == phi_a {
            a
        } else {
            brent(f, a, b, 0.0, 0.1 * PHASE_TOLERANCE, 300)?
        };
        out.push(x);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn scan_interval<M: Medium + ?Sized>(
    a: f64,
    b: f64,
    rt_a: RoundTrip,
    rt_b: RoundTrip,
    geometry: &CavityGeometry,
    medium: &M,
    depth: u32,
    out: &mut Vec<f64>,
) -> Result<()> {
    let slope_flip = rt_a.phase_slope.signum() != rt_b.phase_slope.signum();
    if slope_flip {
        let turn = bisect(
            |x| round_trip(x, geometry, medium).phase_slope,
            a,
            b,
            1e-12 * (b - a).abs().max(1.0),
            200,
        )?;
        let rt_t = round_trip(turn, geometry, medium);
        roots_on_piece(a, turn, rt_a.phase, rt_t.phase, geometry, medium, out)?;
        return roots_on_piece(turn, b, rt_t.phase, rt_b.phase, geometry, medium, out);
    }
    if (rt_b.phase - rt_a.phase).abs() > 0.5 * PI && depth < 12 {
        let mid = 0.5 * (a + b);
        let rt_m = round_trip(mid, geometry, medium);
        scan_interval(a, mid, rt_a, rt_m, geometry, medium, depth + 1, out)?;
        return scan_interval(mid, b, rt_m, rt_b, geometry, medium, depth + 1, out);
    }
    roots_on_piece(a, b, rt_a.phase, rt_b.phase, geometry, medium, out)
}

/// All solutions of φ(Δ) ≡ 0 (mod 2π) in `[lo, hi]` (rad/s).
///
/// The phase is sampled at ≤ FSR/32 spacing; intervals where the phase slope
/// changes sign are split at the turning point so every piece is monotone,
/// then each crossing of a multiple of 2π is refined with Brent's method.
pub fn find_resonances<M: Medium + ?Sized>(
    lo: f64,
    hi: f64,
    geometry: &CavityGeometry,
    medium: &M,
) -> Result<ModeList> {
    geometry.validate()?;
    if !(hi > lo) {
        return Err(Error::invalid("window", format!("[{lo}, {hi}] is empty")));
    }
    let step = hz_to_rad(empty_fsr(geometry)) / 32.0;
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let samples: Vec<RoundTrip> = grid.par_iter().map(|&x| round_trip(x, geometry, medium)).collect();
    let per_interval: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            scan_interval(grid[i], grid[i + 1], samples[i], samples[i + 1], geometry, medium, 0, &mut out)?;
            Ok(out)
        })
        .collect();
    let mut roots = Vec::new();
    for r in per_interval {
        roots.extend(r?);
    }
    // The final grid point belongs to no right-open piece.
    if wrap_phase(samples[n].phase).abs() < PHASE_TOLERANCE && roots.last() != Some(&grid[n]) {
        roots.push(grid[n]);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * step);
    if roots.is_empty() {
        return Err(Error::NoResonance { lo, hi });
    }
    Ok(ModeList { modes: roots.into_iter().map(|x| make_mode(x, geometry, medium)).collect() })
}
