//! Synthetic detector traces: single-pass absorption, cavity transmission and
//! the scanned Fabry–Perot analyzer view of the emitted fields.

use std::f64::consts::PI;

use serde::Serialize;

use crate::cavity::{transmission_spectrum, CavityGeometry};
use crate::medium::{Vacuum, VaporCell};
use crate::trace::SpectrumTrace;
use crate::{hz_to_rad, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyzerConfig {
    pub fsr_hz: f64,
    /// Full width at half maximum.
    pub linewidth_hz: f64,
    /// Total scan width, centered on the pump.
    pub span_hz: f64,
    pub points: usize,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig { fsr_hz: 10e9, linewidth_hz: 30e6, span_hz: 18e9, points: 7201 }
    }
}

impl AnalyzerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth_hz > 0.0 && self.fsr_hz > self.linewidth_hz) {
            return Err(Error::invalid("analyzer", "need fsr > linewidth > 0"));
        }
        if !(self.span_hz > 0.0) {
            return Err(Error::invalid("analyzer.span_hz", "must be positive"));
        }
        if self.points < 2 {
            return Err(Error::invalid("analyzer.points", "need at least 2"));
        }
        Ok(())
    }

    pub fn finesse(&self) -> f64 {
        self.fsr_hz / self.linewidth_hz
    }

    /// Analyzer transmission of a unit-power line at `line_hz`, seen at `f_hz`.
    pub fn response(&self, f_hz: f64, line_hz: f64) -> f64 {
        let k = 2.0 * self.finesse() / PI;
        let s = (PI * (f_hz - line_hz) / self.fsr_hz).sin();
        1.0 / (1.0 + k * k * s * s)
    }

    pub fn step_hz(&self) -> f64 {
        self.span_hz / (self.points - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Pump,
    Stokes,
    AntiStokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Emission {
    /// Offset from the pump, Hz.
    pub offset_hz: f64,
    /// W
    pub power: f64,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EmissionSet {
    pub emissions: Vec<Emission>,
}

impl EmissionSet {
    pub fn new(emissions: Vec<Emission>) -> Result<Self> {
        for (i, e) in emissions.iter().enumerate() {
            if !(e.power >= 0.0) || !e.power.is_finite() {
                return Err(Error::invalid("emission.power", format!("{} is not a valid power", e.power)));
            }
            if !e.offset_hz.is_finite() {
                return Err(Error::invalid("emission.offset_hz", "must be finite"));
            }
            if emissions[..i].iter().any(|o| o.offset_hz == e.offset_hz) {
                return Err(Error::invalid(
                    "emission.offset_hz",
                    format!("two emissions at {} Hz", e.offset_hz),
                ));
            }
        }
        Ok(EmissionSet { emissions })
    }

    /// Pump at zero with the Stokes and anti-Stokes lines at ∓ω_12/2π.
    pub fn fwm(splitting_hz: f64, pump: f64, stokes: f64, anti_stokes: f64) -> Result<Self> {
        EmissionSet::new(vec![
            Emission { offset_hz: -splitting_hz, power: stokes, label: Label::Stokes },
            Emission { offset_hz: 0.0, power: pump, label: Label::Pump },
            Emission { offset_hz: splitting_hz, power: anti_stokes, label: Label::AntiStokes },
        ])
    }

    pub fn union(&self, other: &EmissionSet) -> Result<Self> {
        let mut all = self.emissions.clone();
        all.extend_from_slice(&other.emissions);
        EmissionSet::new(all)
    }
}

/// Scanned analyzer signal: the sum of each emission's Airy comb.
pub fn analyzer_trace(emissions: &EmissionSet, analyzer: &AnalyzerConfig) -> Result<SpectrumTrace> {
    analyzer.validate()?;
    let half = 0.5 * analyzer.span_hz;
    SpectrumTrace::sample("frequency_hz", -half, half, analyzer.points, |f| {
        emissions
            .emissions
            .iter()
            .map(|e| e.power * analyzer.response(f, e.offset_hz))
            .sum()
    })
}

/// Single-pass transmission e^(−αL) on `n` points over `[start_hz, stop_hz]`.
pub fn absorption_trace(start_hz: f64, stop_hz: f64, n: usize, cell: &VaporCell) -> Result<SpectrumTrace> {
    SpectrumTrace::sample("frequency_hz", start_hz, stop_hz, n, |f| {
        cell.single_pass_transmission(hz_to_rad(f))
    })
}

/// Cavity transmission with or without the vapor.
pub fn cavity_trace(
    start_hz: f64,
    stop_hz: f64,
    n: usize,
    geometry: &CavityGeometry,
    cell: &VaporCell,
    with_atoms: bool,
) -> Result<SpectrumTrace> {
    if with_atoms {
        transmission_spectrum(start_hz, stop_hz, n, geometry, cell)
    } else {
        transmission_spectrum(start_hz, stop_hz, n, geometry, &Vacuum)
    }
}

/// Axis positions of the local maxima of `trace` above `threshold`.
pub fn peak_positions(trace: &SpectrumTrace, threshold: f64) -> Vec<f64> {
    trace.local_maxima(threshold).into_iter().map(|i| trace.axis_value(i)).collect()
}

/// Axis positions of the local minima of `trace` below `threshold`.
pub fn dip_positions(trace: &SpectrumTrace, threshold: f64) -> Vec<f64> {
    let v = &trace.values;
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] < threshold && v[i] < v[i - 1] && v[i] <= v[i + 1])
        .map(|i| trace.axis_value(i))
        .collect()
}
