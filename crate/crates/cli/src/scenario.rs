//! Named scenarios. Each writes its traces as CSV plus `manifest.json`.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use rvo_core::analyzer::{absorption_trace, analyzer_trace, cavity_trace, EmissionSet};
use rvo_core::cavity::{empty_fsr, escape_efficiency, finesse, find_resonances, hwhm, locked, CavityGeometry};
use rvo_core::fwm::{most_balanced, triple_resonance_search, GainModel, OperatingPoint, PointModel, Regime};
use rvo_core::medium::{Isotope, VaporCell};
use rvo_core::trace::{uniform_grid, SpectrumTrace};
use rvo_core::{hz_to_rad, rad_to_hz};
use serde::Serialize;

use crate::config::{Grid, RunConfig, Scenario};
use crate::error::CliError;
use crate::output::{write_json, write_trace};

pub const SOFTWARE: &str = concat!("rvo ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRecord {
    pub isotope: Isotope,
    pub pump_detuning_hz: f64,
    /// `None` when no oscillation below the configured cap.
    pub threshold_power_w: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub fsr_hz: f64,
    pub finesse: f64,
    pub hwhm_hz: f64,
    pub escape_efficiency: f64,
    pub excess_survival: f64,
    pub number_density_m3: f64,
    pub thresholds: Vec<ThresholdRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineRecord {
    pub isotope: Isotope,
    pub lower_f: u8,
    pub center_hz: f64,
    pub relative_strength: f64,
    pub abundance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRecord {
    pub frequency_hz: f64,
    pub survival: f64,
    /// `None` when the mode is not resolvable.
    pub half_width_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeTrace {
    pub isotope: Isotope,
    pub regime: Regime,
    pub pump_detuning_hz: f64,
    pub file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerSweep {
    pub isotope: Isotope,
    pub pump_detuning_hz: f64,
    pub pzt_offset_m: f64,
    pub threshold_power_w: Option<f64>,
    pub output_at_pump_power_w: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub operating_points: Vec<OperatingPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub regime_traces: Vec<RegimeTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_sweep: Option<PowerSweep>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub software: String,
    pub scenario: Scenario,
    pub config: RunConfig,
    pub derived: Derived,
    pub summary: Summary,
    /// File names relative to the output directory, in write order.
    pub outputs: Vec<String>,
    /// Wall-clock seconds; excluded from reproducibility comparisons.
    pub duration_s: f64,
}

struct Context<'a> {
    config: &'a RunConfig,
    scenario: Scenario,
    geometry: CavityGeometry,
    cell: VaporCell,
    gain: GainModel,
    out_dir: &'a Path,
    outputs: Vec<String>,
    thresholds: Vec<ThresholdRecord>,
    summary: Summary,
}

impl Context<'_> {
    fn solver<T>(&self, r: rvo_core::Result<T>) -> Result<T, CliError> {
        r.map_err(|source| CliError::Solver { scenario: self.scenario, source })
    }

    fn trace(&mut self, name: &str, trace: &SpectrumTrace) -> Result<(), CliError> {
        let file = format!("{name}.csv");
        write_trace(trace, &self.out_dir.join(&file))?;
        self.outputs.push(file);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let file = format!("{name}.json");
        write_json(value, &self.out_dir.join(&file))?;
        self.outputs.push(file);
        Ok(())
    }
}

/// Runs `config.scenario`, writing outputs under `config.output_dir`.
pub fn run_scenario(config: &RunConfig) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    config.validate()?;
    let scenario = config.scenario.ok_or_else(|| CliError::Config {
        key: "scenario".into(),
        reason: "no scenario given".into(),
    })?;
    let out_dir = config.output_dir.as_path();
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    let mut ctx = Context {
        config,
        scenario,
        geometry: config.geometry()?,
        cell: config.cell()?,
        gain: config.gain_model(),
        out_dir,
        outputs: Vec::new(),
        thresholds: Vec::new(),
        summary: Summary::default(),
    };
    match scenario {
        Scenario::Fig2a => fig2a(&mut ctx)?,
        Scenario::Fig2b => fig2b(&mut ctx)?,
        Scenario::Fig3 => fig3(&mut ctx)?,
        Scenario::Fig4 => fig4(&mut ctx)?,
        Scenario::Scan => scan(&mut ctx)?,
    }
    let g = &ctx.geometry;
    let derived = Derived {
        fsr_hz: empty_fsr(g),
        finesse: finesse(g),
        hwhm_hz: hwhm(g),
        escape_efficiency: escape_efficiency(g),
        excess_survival: g.excess_survival,
        number_density_m3: ctx.cell.density(),
        thresholds: ctx.thresholds,
    };
    let mut outputs = ctx.outputs;
    outputs.push(MANIFEST_FILE.to_string());
    let manifest = RunManifest {
        software: SOFTWARE.to_string(),
        scenario,
        config: RunConfig { scenario: Some(scenario), ..config.clone() },
        derived,
        summary: ctx.summary,
        outputs,
        duration_s: started.elapsed().as_secs_f64(),
    };
    write_json(&manifest, &out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn fig2a(ctx: &mut Context) -> Result<(), CliError> {
    let Grid { start, stop, points } = ctx.config.grids.spectrum;
    let trace = ctx.solver(absorption_trace(start, stop, points, &ctx.cell))?;
    ctx.trace("fig2a_absorption", &trace)?;
    let spec = ctx.cell.spec();
    let lines: Vec<LineRecord> = ctx
        .cell
        .lines()
        .iter()
        .map(|l| LineRecord {
            isotope: l.isotope,
            lower_f: l.lower_f,
            center_hz: rad_to_hz(l.center_detuning),
            relative_strength: l.relative_strength,
            abundance: spec.isotopes.iter().find(|i| i.isotope == l.isotope).map_or(0.0, |i| i.abundance),
        })
        .collect();
    ctx.json("fig2a_lines", &lines)
}

fn fig2b(ctx: &mut Context) -> Result<(), CliError> {
    let Grid { start, stop, points } = ctx.config.grids.spectrum;
    let empty = ctx.solver(cavity_trace(start, stop, points, &ctx.geometry, &ctx.cell, false))?;
    let atoms = ctx.solver(cavity_trace(start, stop, points, &ctx.geometry, &ctx.cell, true))?;
    ctx.trace("fig2b_empty", &empty)?;
    ctx.trace("fig2b_atoms", &atoms)?;
    let modes = ctx.solver(find_resonances(hz_to_rad(start), hz_to_rad(stop), &ctx.geometry, &ctx.cell))?;
    ctx.summary.modes = modes
        .modes
        .iter()
        .map(|m| ModeRecord {
            frequency_hz: rad_to_hz(m.detuning),
            survival: m.survival,
            half_width_hz: m.half_width.is_finite().then(|| rad_to_hz(m.half_width)),
        })
        .collect();
    Ok(())
}

fn regime_tag(regime: Regime) -> &'static str {
    match regime {
        Regime::BothAbove => "both-above",
        Regime::StokesOnly => "stokes-only",
        Regime::Below => "below",
    }
}

fn fig3(ctx: &mut Context) -> Result<(), CliError> {
    let analyzer = ctx.config.analyzer_config();
    let p_in = ctx.config.pump.power_w;
    for search in ctx.config.search_configs() {
        let points = ctx.solver(triple_resonance_search(&search, &ctx.geometry, &ctx.cell, &ctx.gain))?;
        for p in &points {
            ctx.thresholds.push(ThresholdRecord {
                isotope: p.isotope,
                pump_detuning_hz: p.pump_detuning_hz,
                threshold_power_w: p.threshold_power,
            });
        }
        // Points are sorted by σ, so the first of each regime is its strongest.
        for regime in [Regime::BothAbove, Regime::StokesOnly, Regime::Below] {
            let Some(p) = points.iter().find(|p| p.regime == regime) else { continue };
            let g = ctx.geometry.with_pzt_offset(p.pzt_offset_m);
            let model = ctx.solver(PointModel::new(hz_to_rad(p.pump_detuning_hz), p.isotope, &g, &ctx.cell, &ctx.gain))?;
            let state = ctx.solver(model.steady_state(p_in))?;
            let splitting = p.anti_stokes_detuning_hz - p.pump_detuning_hz;
            let set = ctx.solver(EmissionSet::fwm(
                splitting,
                state.pump_circulating * g.t2(),
                p.stokes_power,
                p.anti_stokes_power,
            ))?;
            let trace = ctx.solver(analyzer_trace(&set, &analyzer))?;
            let name = format!("fig3_{}_{}", p.isotope.to_string().to_lowercase(), regime_tag(regime));
            ctx.trace(&name, &trace)?;
            ctx.summary.regime_traces.push(RegimeTrace {
                isotope: p.isotope,
                regime,
                pump_detuning_hz: p.pump_detuning_hz,
                file: format!("{name}.csv"),
            });
        }
        ctx.summary.operating_points.extend(points);
    }
    Ok(())
}

/// Pump detuning (rad/s) and locked geometry for single-point scenarios.
fn operating_pump(ctx: &Context) -> Result<(f64, CavityGeometry), CliError> {
    let pump = &ctx.config.pump;
    if let Some(hz) = pump.detuning_hz {
        let d = hz_to_rad(hz);
        return Ok((d, locked(d, &ctx.geometry, &ctx.cell)));
    }
    let search = ctx
        .config
        .search_configs()
        .into_iter()
        .find(|s| s.isotope == pump.isotope)
        .ok_or_else(|| CliError::Config {
            key: "pump.detuning_hz".into(),
            reason: format!("unset, and no search window for {}", pump.isotope),
        })?;
    let points = ctx.solver(triple_resonance_search(&search, &ctx.geometry, &ctx.cell, &ctx.gain))?;
    let best = most_balanced(&points).ok_or_else(|| CliError::Solver {
        scenario: ctx.scenario,
        source: rvo_core::Error::NoResonance { lo: hz_to_rad(search.start_hz), hi: hz_to_rad(search.stop_hz) },
    })?;
    Ok((hz_to_rad(best.pump_detuning_hz), ctx.geometry.with_pzt_offset(best.pzt_offset_m)))
}

fn fig4(ctx: &mut Context) -> Result<(), CliError> {
    let (pump, g) = operating_pump(ctx)?;
    let isotope = ctx.config.pump.isotope;
    let model = ctx.solver(PointModel::new(pump, isotope, &g, &ctx.cell, &ctx.gain))?;
    let Grid { start, stop, points } = ctx.config.grids.power;
    let grid = ctx.solver(uniform_grid(start, stop, points))?;
    let states = ctx.solver(grid.par_iter().map(|&p| model.steady_state(p)).collect::<rvo_core::Result<Vec<_>>>())?;
    let step = grid[1] - grid[0];
    let make = |f: &dyn Fn(usize) -> f64| {
        SpectrumTrace::new("pump_power_w", start, step, (0..states.len()).map(f).collect())
    };
    let total = ctx.solver(make(&|i| states[i].total()))?;
    let stokes = ctx.solver(make(&|i| states[i].stokes))?;
    let anti_stokes = ctx.solver(make(&|i| states[i].anti_stokes))?;
    ctx.trace("fig4_total", &total)?;
    ctx.trace("fig4_stokes", &stokes)?;
    ctx.trace("fig4_anti_stokes", &anti_stokes)?;
    let threshold = ctx.solver(model.threshold_power(ctx.config.gain.threshold_cap_w))?;
    let at_power = ctx.solver(model.steady_state(ctx.config.pump.power_w))?;
    ctx.thresholds.push(ThresholdRecord { isotope, pump_detuning_hz: rad_to_hz(pump), threshold_power_w: threshold });
    ctx.summary.power_sweep = Some(PowerSweep {
        isotope,
        pump_detuning_hz: rad_to_hz(pump),
        pzt_offset_m: g.pzt_offset,
        threshold_power_w: threshold,
        output_at_pump_power_w: at_power.total(),
    });
    Ok(())
}

/// Pump detuning sweep with the cavity locked to the pump at every point.
fn scan(ctx: &mut Context) -> Result<(), CliError> {
    let Grid { start, stop, points } = ctx.config.grids.scan;
    let grid = ctx.solver(uniform_grid(start, stop, points))?;
    let (isotope, p_in, cap) = (ctx.config.pump.isotope, ctx.config.pump.power_w, ctx.config.gain.threshold_cap_w);
    let rows: Vec<(f64, f64, f64)> = ctx.solver(
        grid.par_iter()
            .map(|&hz| {
                let model = PointModel::locked(hz_to_rad(hz), isotope, &ctx.geometry, &ctx.cell, &ctx.gain)?;
                let threshold = model.threshold_power(cap)?.unwrap_or(f64::INFINITY);
                Ok((model.spectral_radius(p_in), threshold, model.steady_state(p_in)?.total()))
            })
            .collect::<rvo_core::Result<Vec<_>>>(),
    )?;
    let step = grid[1] - grid[0];
    let columns = [
        ("scan_spectral_radius", rows.iter().map(|r| r.0).collect::<Vec<_>>()),
        ("scan_threshold_w", rows.iter().map(|r| r.1).collect()),
        ("scan_output_w", rows.iter().map(|r| r.2).collect()),
    ];
    for (name, values) in columns {
        let trace = ctx.solver(SpectrumTrace::new("frequency_hz", start, step, values))?;
        ctx.trace(name, &trace)?;
    }
    Ok(())
}
