//! Double-Λ four-wave mixing oscillator: detunings, parametric gain,
//! round-trip map for (Stokes, anti-Stokes*), threshold and steady state.
//!
//! One round trip acts on the pair `(a_S, a_AS*)` as `M = G(r, θ)·D` with
//!
//! ```text
//! G = [[cosh r, e^{iθ} sinh r], [e^{−iθ} sinh r, cosh r]]
//! D = diag(ρ_S e^{iφ_S}, ρ_AS e^{−iφ_AS})
//! ```
//!
//! where ρ and φ are the round-trip amplitude survival and phase of each
//! sideband. The oscillator is above threshold when the spectral radius σ(M)
//! exceeds 1.
//!
//! Above threshold the parametric strength is clamped to the value r* where
//! σ = 1. The circulating sideband power P_tot follows from the saturation law
//! `r(P_circ − D)/(1 + P_tot/P_sat) = r*`, where `D = L·P_tot` is the pump
//! power converted per round trip (L is the sidebands' fractional round-trip
//! loss). The conversion also scales the pump survival by `√(1 − D/P_circ)`,
//! which lowers the pump buildup; the circulating pump power is the fixed
//! point of that loop.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cavity::{empty_fsr, find_resonances, locked, round_trip, wrap_phase, CavityGeometry, RoundTrip};
use crate::medium::{Isotope, Medium, VaporCell};
use crate::roots::bisect;
use crate::{hz_to_rad, rad_to_hz, Error, Result};

/// C_g (m²/W) from [`calibrate_default_gain`].
pub const DEFAULT_GAIN_COEFFICIENT: f64 = 1.816_685e-15;
/// P_sat (W) from [`calibrate_default_gain`].
pub const DEFAULT_SATURATION_POWER: f64 = 2.462_389e-2;
/// Threshold targeted at the calibration point (W).
pub const CALIBRATION_THRESHOLD: f64 = 0.020;
/// Pump power at which the output target applies (W).
pub const CALIBRATION_PUMP_POWER: f64 = 0.100;
/// Total output targeted at [`CALIBRATION_PUMP_POWER`] (W).
pub const CALIBRATION_OUTPUT: f64 = 1.2e-3;
pub const DEFAULT_ONE_PHOTON_SCALE_HZ: f64 = 1.0e9;
pub const DEFAULT_TWO_PHOTON_WIDTH_HZ: f64 = 1.0e6;
/// Output power above which a sideband counts as oscillating (W).
pub const DEFAULT_OUTPUT_FLOOR: f64 = 1e-6;
/// Pump power above which a threshold search gives up (W).
pub const DEFAULT_THRESHOLD_CAP: f64 = 10.0;

const MAX_FIXED_POINT_ITERATIONS: usize = 10_000;
const MAX_STRENGTH: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpConfig {
    /// rad/s from the reference
    pub detuning: f64,
    /// W
    pub power: f64,
    pub isotope: Isotope,
}

/// One-photon detunings of the pump from the two ground levels of the driven isotope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FwmDetunings {
    /// Δ_b = ω_p − ω_01 (transition out of the lower ground level), rad/s
    pub delta_b: f64,
    /// Δ_a = ω_p − ω_02, rad/s
    pub delta_a: f64,
    /// ω_12, rad/s
    pub omega_12: f64,
}

impl FwmDetunings {
    pub fn from_delta_b(delta_b: f64, omega_12: f64) -> Self {
        FwmDetunings { delta_b, delta_a: delta_b + omega_12, omega_12 }
    }

    /// (Δ_a + Δ_b)/2
    pub fn mean(&self) -> f64 {
        0.5 * (self.delta_a + self.delta_b)
    }
}

pub fn detunings(pump_detuning: f64, isotope: Isotope) -> FwmDetunings {
    let (upper_line, _) = isotope.band_centers();
    FwmDetunings::from_delta_b(pump_detuning - upper_line, isotope.ground_splitting())
}

/// (ω_S, ω_AS) = (ω_p − ω_12, ω_p + ω_12), as detunings.
pub fn sideband_frequencies(pump_detuning: f64, isotope: Isotope) -> (f64, f64) {
    let w12 = isotope.ground_splitting();
    (pump_detuning - w12, pump_detuning + w12)
}

fn buildup(t1: f64, rt: &RoundTrip, survival: f64) -> f64 {
    let rt = RoundTrip { survival, ..*rt };
    t1 / rt.airy_denominator()
}

/// Circulating pump power P_in·T1/((1−ρ)² + 4ρ sin²(φ/2)).
pub fn pump_buildup<M: Medium + ?Sized>(pump_detuning: f64, geometry: &CavityGeometry, medium: &M, p_in: f64) -> f64 {
    let rt = round_trip(pump_detuning, geometry, medium);
    p_in * buildup(geometry.t1(), &rt, rt.survival)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainModel {
    /// C_g, m²/W
    pub coefficient: f64,
    /// P_sat, W
    pub saturation_power: f64,
    /// Δ_s, rad/s
    pub one_photon_scale: f64,
    /// γ_12, rad/s
    pub two_photon_width: f64,
}

impl Default for GainModel {
    fn default() -> Self {
        GainModel {
            coefficient: DEFAULT_GAIN_COEFFICIENT,
            saturation_power: DEFAULT_SATURATION_POWER,
            one_photon_scale: hz_to_rad(DEFAULT_ONE_PHOTON_SCALE_HZ),
            two_photon_width: hz_to_rad(DEFAULT_TWO_PHOTON_WIDTH_HZ),
        }
    }
}

impl GainModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.coefficient >= 0.0) || !self.coefficient.is_finite() {
            return Err(Error::invalid("coefficient", "must be finite and non-negative"));
        }
        for (name, v) in [
            ("saturation_power", self.saturation_power),
            ("one_photon_scale", self.one_photon_scale),
            ("two_photon_width", self.two_photon_width),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// r = C_g·n·L_cell·P_circ / (1 + (Δ̄/Δ_s)²) / (1 + (δ₂/γ_12)²).
pub fn parametric_strength(
    detunings: &FwmDetunings,
    two_photon_detuning: f64,
    density: f64,
    cell_length: f64,
    p_circ: f64,
    gain: &GainModel,
) -> f64 {
    let one = 1.0 + (detunings.mean() / gain.one_photon_scale).powi(2);
    let two = 1.0 + (two_photon_detuning / gain.two_photon_width).powi(2);
    gain.coefficient * density * cell_length * p_circ.max(0.0) / one / two
}

fn eigenvalues(m: &[[Complex64; 2]; 2]) -> (Complex64, Complex64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - 4.0 * det).sqrt();
    ((tr + disc) * 0.5, (tr - disc) * 0.5)
}

/// Round-trip map of the sideband pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledModeMap {
    pub r: f64,
    pub theta: f64,
    /// ρ_S e^{iφ_S}
    pub stokes: Complex64,
    /// ρ_AS e^{−iφ_AS}
    pub anti_stokes: Complex64,
}

impl CoupledModeMap {
    pub fn new(r: f64, theta: f64, stokes: &RoundTrip, anti_stokes: &RoundTrip) -> Self {
        CoupledModeMap {
            r,
            theta,
            stokes: Complex64::from_polar(stokes.survival, wrap_phase(stokes.phase)),
            anti_stokes: Complex64::from_polar(anti_stokes.survival, -wrap_phase(anti_stokes.phase)),
        }
    }

    pub fn with_strength(&self, r: f64) -> Self {
        CoupledModeMap { r, ..*self }
    }

    pub fn gain_matrix(&self) -> [[Complex64; 2]; 2] {
        let (ch, sh) = (self.r.cosh(), self.r.sinh());
        let e = Complex64::from_polar(1.0, self.theta);
        [[ch.into(), e * sh], [e.conj() * sh, ch.into()]]
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let g = self.gain_matrix();
        [
            [g[0][0] * self.stokes, g[0][1] * self.anti_stokes],
            [g[1][0] * self.stokes, g[1][1] * self.anti_stokes],
        ]
    }

    fn eigenvalues(&self) -> (Complex64, Complex64) {
        eigenvalues(&self.matrix())
    }

    /// σ(M)
    pub fn spectral_radius(&self) -> f64 {
        if self.r < 20.0 {
            let (a, b) = self.eigenvalues();
            return a.norm().max(b.norm());
        }
        // σ(G·D) = cosh r·σ((G/cosh r)·D); avoids inf·0 for large r.
        let t = Complex64::from_polar(self.r.tanh(), self.theta);
        let (a, b) = eigenvalues(&[
            [self.stokes, t * self.anti_stokes],
            [t.conj() * self.stokes, self.anti_stokes],
        ]);
        let inner = a.norm().max(b.norm());
        if inner == 0.0 {
            0.0
        } else {
            inner * self.r.cosh()
        }
    }

    /// Eigenvector of the largest-modulus eigenvalue, unit norm.
    pub fn dominant_eigenvector(&self) -> [Complex64; 2] {
        let (a, b) = self.eigenvalues();
        let lambda = if a.norm() >= b.norm() { a } else { b };
        let m = self.matrix();
        let c1 = [m[0][1], lambda - m[0][0]];
        let c2 = [lambda - m[1][1], m[1][0]];
        let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
        let n2 = c2[0].norm_sqr() + c2[1].norm_sqr();
        let (v, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
        if n == 0.0 {
            // M is diagonal with the larger entry first or second.
            return if m[0][0].norm() >= m[1][1].norm() {
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
            } else {
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
            };
        }
        let n = n.sqrt();
        [v[0] / n, v[1] / n]
    }

    pub fn det_gain(&self) -> Complex64 {
        let g = self.gain_matrix();
        g[0][0] * g[1][1] - g[0][1] * g[1][0]
    }

    /// Strength r* at which σ = 1, if any below r = 50.
    pub fn threshold_strength(&self) -> Option<f64> {
        let f = |r: f64| self.with_strength(r).spectral_radius() - 1.0;
        if f(0.0) >= 0.0 {
            return Some(0.0);
        }
        let mut hi = 0.5;
        while f(hi) < 0.0 {
            hi *= 2.0;
            if hi > MAX_STRENGTH {
                return None;
            }
        }
        bisect(f, 0.0, hi, 1e-15, 200).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    BothAbove,
    StokesOnly,
    Below,
}

impl Regime {
    pub fn from_outputs(stokes: f64, anti_stokes: f64, floor: f64) -> Self {
        match (stokes > floor, anti_stokes > floor) {
            (true, true) => Regime::BothAbove,
            (true, false) => Regime::StokesOnly,
            _ => Regime::Below,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    /// Circulating pump power including depletion, W.
    pub pump_circulating: f64,
    /// Stokes output through the input coupler, W.
    pub stokes: f64,
    /// Anti-Stokes output through the input coupler, W.
    pub anti_stokes: f64,
    /// Parametric strength in the steady state.
    pub strength: f64,
}

impl SteadyState {
    pub fn total(&self) -> f64 {
        self.stokes + self.anti_stokes
    }
}

/// All frequency-dependent quantities of one pump setting, so that power
/// dependent quantities are cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct PointModel {
    pub isotope: Isotope,
    pub pump_detuning: f64,
    pub detunings: FwmDetunings,
    pub pump: RoundTrip,
    pub stokes: RoundTrip,
    pub anti_stokes: RoundTrip,
    pub t1: f64,
    /// dr/dP_circ, 1/W
    pub strength_per_watt: f64,
    pub saturation_power: f64,
}

impl PointModel {
    /// Uses `geometry` as given (no pump lock).
    pub fn new(
        pump_detuning: f64,
        isotope: Isotope,
        geometry: &CavityGeometry,
        cell: &VaporCell,
        gain: &GainModel,
    ) -> Result<Self> {
        geometry.validate()?;
        gain.validate()?;
        if !cell.spec().isotopes.iter().any(|i| i.isotope == isotope) {
            return Err(Error::invalid("isotope", format!("{isotope} is not in the cell")));
        }
        let det = detunings(pump_detuning, isotope);
        let (ws, was) = sideband_frequencies(pump_detuning, isotope);
        let two_photon = (was - pump_detuning) - det.omega_12;
        Ok(PointModel {
            isotope,
            pump_detuning,
            detunings: det,
            pump: round_trip(pump_detuning, geometry, cell),
            stokes: round_trip(ws, geometry, cell),
            anti_stokes: round_trip(was, geometry, cell),
            t1: geometry.t1(),
            strength_per_watt: parametric_strength(&det, two_photon, cell.density(), geometry.cell_length, 1.0, gain),
            saturation_power: gain.saturation_power,
        })
    }

    /// Locks the cavity to the pump first.
    pub fn locked(
        pump_detuning: f64,
        isotope: Isotope,
        geometry: &CavityGeometry,
        cell: &VaporCell,
        gain: &GainModel,
    ) -> Result<Self> {
        let g = locked(pump_detuning, geometry, cell);
        PointModel::new(pump_detuning, isotope, &g, cell, gain)
    }

    pub fn stokes_detuning(&self) -> f64 {
        self.pump_detuning - self.detunings.omega_12
    }

    pub fn anti_stokes_detuning(&self) -> f64 {
        self.pump_detuning + self.detunings.omega_12
    }

    /// Undepleted circulating pump power.
    pub fn pump_circulating(&self, p_in: f64) -> f64 {
        p_in * buildup(self.t1, &self.pump, self.pump.survival)
    }

    pub fn map(&self, r: f64) -> CoupledModeMap {
        CoupledModeMap::new(r, 0.0, &self.stokes, &self.anti_stokes)
    }

    /// σ(M) at the undepleted pump power for input `p_in`.
    pub fn spectral_radius(&self, p_in: f64) -> f64 {
        self.map(self.strength_per_watt * self.pump_circulating(p_in)).spectral_radius()
    }

    /// Smallest input power with σ(M) = 1, or `None` when it lies above `cap`.
    pub fn threshold_power(&self, cap: f64) -> Result<Option<f64>> {
        if !(cap > 0.0) {
            return Err(Error::invalid("threshold_cap", "must be positive"));
        }
        let f = |p: f64| self.spectral_radius(p) - 1.0;
        if f(cap) < 0.0 {
            return Ok(None);
        }
        if f(0.0) >= 0.0 {
            return Ok(Some(0.0));
        }
        bisect(f, 0.0, cap, 1e-15 * cap, 400).map(Some)
    }

    /// Steady-state outputs at input power `p_in`.
    pub fn steady_state(&self, p_in: f64) -> Result<SteadyState> {
        if !(p_in >= 0.0) {
            return Err(Error::invalid("pump_power", "must be non-negative"));
        }
        let undepleted = self.pump_circulating(p_in);
        let below = SteadyState {
            pump_circulating: undepleted,
            stokes: 0.0,
            anti_stokes: 0.0,
            strength: self.strength_per_watt * undepleted,
        };
        let r0 = self.strength_per_watt * undepleted;
        if self.map(r0).spectral_radius() <= 1.0 {
            return Ok(below);
        }
        let Some(r_star) = self.map(0.0).threshold_strength() else {
            return Ok(below);
        };
        let clamped = self.map(r_star);
        let v = clamped.dominant_eigenvector();
        let u = [clamped.stokes * v[0], clamped.anti_stokes * v[1]];
        let u_norm = u[0].norm_sqr() + u[1].norm_sqr();
        // Converted pump power per round trip per watt of circulating sideband power.
        let loss_per_power = (1.0 / u_norm - 1.0).max(0.0);
        let k = self.strength_per_watt / r_star;
        let p_sat = self.saturation_power;

        // The sidebands see the pump left after conversion, P_circ − D, so
        // r(P_circ − D)/(1 + P_tot/P_sat) = r* with D = L·P_tot is linear in P_tot.
        let sideband_power = |p_circ: f64| {
            let excess = k * p_circ - 1.0;
            if excess > 0.0 {
                p_sat * excess / (1.0 + loss_per_power * p_sat * k)
            } else {
                0.0
            }
        };
        let pump_after = |p_circ: f64| {
            let converted = if p_circ > 0.0 { loss_per_power * sideband_power(p_circ) / p_circ } else { 0.0 };
            let rho_eff = self.pump.survival * (1.0 - converted).max(0.0).sqrt();
            p_in * buildup(self.t1, &self.pump, rho_eff)
        };
        let p_circ = bisect(
            |x| x - pump_after(x),
            0.0,
            undepleted,
            1e-14 * undepleted,
            MAX_FIXED_POINT_ITERATIONS,
        )?;
        let total = sideband_power(p_circ);
        let share_s = u[0].norm_sqr() / u_norm;
        Ok(SteadyState {
            pump_circulating: p_circ,
            stokes: self.t1 * total * share_s,
            anti_stokes: self.t1 * total * (1.0 - share_s),
            strength: if total > 0.0 { r_star } else { self.strength_per_watt * p_circ },
        })
    }

    pub fn classify(&self, p_in: f64, floor: f64) -> Result<Regime> {
        let s = self.steady_state(p_in)?;
        Ok(Regime::from_outputs(s.stokes, s.anti_stokes, floor))
    }
}

/// Threshold at a pump setting with the geometry as given.
pub fn threshold_power(
    pump: &PumpConfig,
    geometry: &CavityGeometry,
    cell: &VaporCell,
    gain: &GainModel,
    cap: f64,
) -> Result<Option<f64>> {
    PointModel::new(pump.detuning, pump.isotope, geometry, cell, gain)?.threshold_power(cap)
}

pub fn steady_state_output(
    pump: &PumpConfig,
    geometry: &CavityGeometry,
    cell: &VaporCell,
    gain: &GainModel,
) -> Result<SteadyState> {
    PointModel::new(pump.detuning, pump.isotope, geometry, cell, gain)?.steady_state(pump.power)
}

pub fn classify_regime(
    pump: &PumpConfig,
    geometry: &CavityGeometry,
    cell: &VaporCell,
    gain: &GainModel,
    floor: f64,
) -> Result<Regime> {
    PointModel::new(pump.detuning, pump.isotope, geometry, cell, gain)?.classify(pump.power, floor)
}

/// A sideband's position relative to the nearest pulled cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidebandResonance {
    /// ω_field − ω_mode, Hz
    pub cavity_detuning_hz: f64,
    /// Half width of that mode, Hz (infinite when unresolvable).
    pub half_width_hz: f64,
    pub survival: f64,
}

impl SidebandResonance {
    pub fn is_within_half_width(&self) -> bool {
        self.cavity_detuning_hz.abs() < self.half_width_hz
    }

    fn mismatch(&self) -> f64 {
        if self.half_width_hz.is_finite() {
            self.cavity_detuning_hz.abs() / self.half_width_hz
        } else {
            0.0
        }
    }
}

/// Nearest pulled mode to `detuning` under `geometry`.
pub fn sideband_resonance<M: Medium + ?Sized>(
    detuning: f64,
    geometry: &CavityGeometry,
    medium: &M,
) -> Result<SidebandResonance> {
    let fsr = hz_to_rad(empty_fsr(geometry));
    let modes = find_resonances(detuning - fsr, detuning + fsr, geometry, medium)?;
    let mode = modes.nearest(detuning).expect("mode list is non-empty");
    Ok(SidebandResonance {
        cavity_detuning_hz: rad_to_hz(detuning - mode.detuning),
        half_width_hz: rad_to_hz(mode.half_width),
        survival: round_trip(detuning, geometry, medium).survival,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub isotope: Isotope,
    pub pump_detuning_hz: f64,
    pub stokes_detuning_hz: f64,
    pub anti_stokes_detuning_hz: f64,
    pub pzt_offset_m: f64,
    pub pump_survival: f64,
    pub stokes: SidebandResonance,
    pub anti_stokes: SidebandResonance,
    /// σ(M) at the undepleted pump for the scan's input power.
    pub spectral_radius: f64,
    pub regime: Regime,
    /// W; `None` if no oscillation below the cap.
    pub threshold_power: Option<f64>,
    pub pump_power: f64,
    pub stokes_power: f64,
    pub anti_stokes_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    pub isotope: Isotope,
    pub start_hz: f64,
    pub stop_hz: f64,
    pub step_hz: f64,
    /// W
    pub pump_power: f64,
    /// W
    pub threshold_cap: f64,
    /// W
    pub output_floor: f64,
}

impl SearchConfig {
    pub fn new(isotope: Isotope, start_hz: f64, stop_hz: f64, pump_power: f64) -> Self {
        SearchConfig {
            isotope,
            start_hz,
            stop_hz,
            step_hz: 1e6,
            pump_power,
            threshold_cap: DEFAULT_THRESHOLD_CAP,
            output_floor: DEFAULT_OUTPUT_FLOOR,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.stop_hz > self.start_hz) {
            return Err(Error::invalid("window", "stop must exceed start"));
        }
        if !(self.step_hz > 0.0) {
            return Err(Error::invalid("step_hz", "must be positive"));
        }
        if !(self.pump_power >= 0.0) {
            return Err(Error::invalid("pump_power", "must be non-negative"));
        }
        Ok(())
    }
}

struct Candidate {
    index: usize,
    geometry: CavityGeometry,
    stokes: SidebandResonance,
    anti_stokes: SidebandResonance,
}

fn candidate(
    index: usize,
    pump_detuning: f64,
    isotope: Isotope,
    geometry: &CavityGeometry,
    cell: &VaporCell,
) -> Result<Option<Candidate>> {
    let g = locked(pump_detuning, geometry, cell);
    let (ws, was) = sideband_frequencies(pump_detuning, isotope);
    let near = |d: f64| {
        let rt = round_trip(d, &g, cell);
        wrap_phase(rt.phase).abs() < rt.phase_half_width()
    };
    if !(near(ws) && near(was)) {
        return Ok(None);
    }
    let stokes = match sideband_resonance(ws, &g, cell) {
        Ok(s) => s,
        Err(Error::NoResonance { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if !stokes.is_within_half_width() {
        return Ok(None);
    }
    let anti_stokes = match sideband_resonance(was, &g, cell) {
        Ok(s) => s,
        Err(Error::NoResonance { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if !anti_stokes.is_within_half_width() {
        return Ok(None);
    }
    Ok(Some(Candidate { index, geometry: g, stokes, anti_stokes }))
}

/// Scans the pump over a window with the cavity locked to it and keeps the
/// settings where both sidebands sit within the half width of a pulled mode.
///
/// Each contiguous run of accepted grid points is reported once, at the point
/// with the smallest worst-case mismatch. Results are sorted by σ(M)
/// descending, ties by pump frequency.
pub fn triple_resonance_search(
    search: &SearchConfig,
    geometry: &CavityGeometry,
    cell: &VaporCell,
    gain: &GainModel,
) -> Result<Vec<OperatingPoint>> {
    search.validate()?;
    geometry.validate()?;
    gain.validate()?;
    let n = ((search.stop_hz - search.start_hz) / search.step_hz).floor() as usize + 1;
    let pump_at = |i: usize| hz_to_rad(search.start_hz + search.step_hz * i as f64);
    let found: Vec<Option<Candidate>> = (0..n)
        .into_par_iter()
        .map(|i| candidate(i, pump_at(i), search.isotope, geometry, cell))
        .collect::<Result<_>>()?;

    let mut runs: Vec<Candidate> = Vec::new();
    let mut last_index = None;
    for c in found.into_iter().flatten() {
        let worst = |c: &Candidate| c.stokes.mismatch().max(c.anti_stokes.mismatch());
        match (last_index, runs.last_mut()) {
            (Some(prev), Some(best)) if c.index == prev + 1 => {
                last_index = Some(c.index);
                if worst(&c) < worst(best) {
                    *best = c;
                }
            }
            _ => {
                last_index = Some(c.index);
                runs.push(c);
            }
        }
    }

    let mut points: Vec<OperatingPoint> = runs
        .into_par_iter()
        .map(|c| {
            let pump = pump_at(c.index);
            let model = PointModel::new(pump, search.isotope, &c.geometry, cell, gain)?;
            let state = model.steady_state(search.pump_power)?;
            Ok(OperatingPoint {
                isotope: search.isotope,
                pump_detuning_hz: rad_to_hz(pump),
                stokes_detuning_hz: rad_to_hz(model.stokes_detuning()),
                anti_stokes_detuning_hz: rad_to_hz(model.anti_stokes_detuning()),
                pzt_offset_m: c.geometry.pzt_offset,
                pump_survival: model.pump.survival,
                stokes: c.stokes,
                anti_stokes: c.anti_stokes,
                spectral_radius: model.spectral_radius(search.pump_power),
                regime: Regime::from_outputs(state.stokes, state.anti_stokes, search.output_floor),
                threshold_power: model.threshold_power(search.threshold_cap)?,
                pump_power: search.pump_power,
                stokes_power: state.stokes,
                anti_stokes_power: state.anti_stokes,
            })
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| {
        b.spectral_radius
            .total_cmp(&a.spectral_radius)
            .then(a.pump_detuning_hz.total_cmp(&b.pump_detuning_hz))
    });
    Ok(points)
}

/// Among search results, the one whose weaker sideband survives best.
pub fn most_balanced(points: &[OperatingPoint]) -> Option<&OperatingPoint> {
    points.iter().max_by(|a, b| {
        let key = |p: &OperatingPoint| p.stokes.survival.min(p.anti_stokes.survival);
        key(a).total_cmp(&key(b)).then(b.pump_detuning_hz.total_cmp(&a.pump_detuning_hz))
    })
}

/// C_g that puts the threshold of the point described by `model` (built with
/// `gain`) at `target_threshold`.
pub fn calibrate_gain_coefficient(model: &PointModel, gain: &GainModel, target_threshold: f64) -> Result<f64> {
    if !(target_threshold > 0.0) {
        return Err(Error::invalid("target_threshold", "must be positive"));
    }
    let r_star = model
        .map(0.0)
        .threshold_strength()
        .ok_or_else(|| Error::invalid("operating point", "no finite threshold strength"))?;
    let per_coefficient = model.strength_per_watt / gain.coefficient * model.pump_circulating(target_threshold);
    if !(per_coefficient > 0.0) {
        return Err(Error::invalid("operating point", "parametric strength vanishes"));
    }
    Ok(r_star / per_coefficient)
}

/// P_sat for which the total output at `p_in` equals `target_output`.
pub fn calibrate_saturation_power(model: &PointModel, p_in: f64, target_output: f64) -> Result<f64> {
    if !(target_output > 0.0) {
        return Err(Error::invalid("target_output", "must be positive"));
    }
    let output = |log_psat: f64| {
        let m = PointModel { saturation_power: log_psat.exp(), ..model.clone() };
        m.steady_state(p_in).map(|s| s.total().ln() - target_output.ln())
    };
    let f = |x: f64| output(x).unwrap_or(f64::NAN);
    let x = bisect(f, (1e-9f64).ln(), (1e3f64).ln(), 1e-12, 500)?;
    Ok(x.exp())
}

/// The ⁸⁷Rb triple-resonance point used for calibration: the search result in
/// −6…8 GHz (1 MHz steps) whose weaker sideband survives best.
pub fn calibration_point(geometry: &CavityGeometry, cell: &VaporCell, gain: &GainModel) -> Result<OperatingPoint> {
    let search = SearchConfig::new(Isotope::Rb87, -6e9, 8e9, CALIBRATION_PUMP_POWER);
    let points = triple_resonance_search(&search, geometry, cell, gain)?;
    most_balanced(&points)
        .cloned()
        .ok_or_else(|| Error::invalid("calibration", "no ⁸⁷Rb triple resonance in −6…8 GHz"))
}

/// Calibrates C_g and P_sat at [`calibration_point`] so the threshold is
/// [`CALIBRATION_THRESHOLD`] and the total output at [`CALIBRATION_PUMP_POWER`]
/// is [`CALIBRATION_OUTPUT`]. Returns the updated gain model.
pub fn calibrate_default_gain(geometry: &CavityGeometry, cell: &VaporCell, gain: &GainModel) -> Result<GainModel> {
    let point = calibration_point(geometry, cell, gain)?;
    let pump = hz_to_rad(point.pump_detuning_hz);
    let model = PointModel::locked(pump, Isotope::Rb87, geometry, cell, gain)?;
    let coefficient = calibrate_gain_coefficient(&model, gain, CALIBRATION_THRESHOLD)?;
    let tuned = GainModel { coefficient, ..*gain };
    let model = PointModel::locked(pump, Isotope::Rb87, geometry, cell, &tuned)?;
    let saturation_power = calibrate_saturation_power(&model, CALIBRATION_PUMP_POWER, CALIBRATION_OUTPUT)?;
    Ok(GainModel { saturation_power, ..tuned })
}

/// Equal-survival on-resonance threshold strength, −ln ρ.
pub fn equal_survival_threshold(rho: f64) -> f64 {
    -rho.ln()
}
