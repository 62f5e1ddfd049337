//! Run configuration: a JSON tree with every key defaulted, unknown keys
//! rejected and each value checked before any solver runs.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rvo_core::analyzer::AnalyzerConfig;
use rvo_core::cavity::{calibrate_excess_loss, CavityGeometry, DEFAULT_FINESSE};
use rvo_core::fwm::{
    GainModel, SearchConfig, DEFAULT_GAIN_COEFFICIENT, DEFAULT_ONE_PHOTON_SCALE_HZ, DEFAULT_OUTPUT_FLOOR,
    DEFAULT_SATURATION_POWER, DEFAULT_THRESHOLD_CAP, DEFAULT_TWO_PHOTON_WIDTH_HZ,
};
use rvo_core::medium::{CellSpec, Isotope, IsotopeSpec, VaporCell, DEFAULT_CHI_PREFACTOR};
use rvo_core::rb_d2::NATURAL_WIDTH_HZ;
use rvo_core::hz_to_rad;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4,
    Scan,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Scenario::Fig2a, Scenario::Fig2b, Scenario::Fig3, Scenario::Fig4, Scenario::Scan];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig2a => "fig2a",
            Scenario::Fig2b => "fig2b",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Scan => "scan",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: Option<Scenario>,
    pub output_dir: PathBuf,
    pub cavity: CavitySection,
    pub cell: CellSection,
    pub pump: PumpSection,
    pub gain: GainSection,
    pub analyzer: AnalyzerSection,
    pub grids: GridSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: None,
            output_dir: PathBuf::from("out"),
            cavity: CavitySection::default(),
            cell: CellSection::default(),
            pump: PumpSection::default(),
            gain: GainSection::default(),
            analyzer: AnalyzerSection::default(),
            grids: GridSection::default(),
        }
    }
}

/// Cavity geometry. The excess loss is derived from `finesse`; the cell
/// length comes from `cell.length_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub length_m: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    pub finesse: f64,
    pub pzt_offset_m: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        CavitySection { length_m: 0.177, r1: 0.90, r2: 0.995, finesse: DEFAULT_FINESSE, pzt_offset_m: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotopeEntry {
    pub isotope: Isotope,
    pub abundance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellSection {
    pub temperature_k: f64,
    pub length_m: f64,
    pub isotopes: Vec<IsotopeEntry>,
    pub density_scale: f64,
    /// C_χ, m⁴/s
    pub chi_prefactor: f64,
    pub natural_width_hz: f64,
}

impl Default for CellSection {
    fn default() -> Self {
        CellSection {
            temperature_k: 378.15,
            length_m: 0.075,
            isotopes: [Isotope::Rb85, Isotope::Rb87]
                .into_iter()
                .map(|isotope| IsotopeEntry { isotope, abundance: isotope.natural_abundance() })
                .collect(),
            density_scale: 1.0,
            chi_prefactor: DEFAULT_CHI_PREFACTOR,
            natural_width_hz: NATURAL_WIDTH_HZ,
        }
    }
}

/// Operating pump for `fig4`. Without `detuning_hz` the pump sits at the
/// most balanced triple resonance found in the first search window for
/// `isotope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSection {
    pub isotope: Isotope,
    pub detuning_hz: Option<f64>,
    pub power_w: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        PumpSection { isotope: Isotope::Rb87, detuning_hz: None, power_w: 0.100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainSection {
    /// C_g, m²/W
    pub coefficient: f64,
    pub saturation_power_w: f64,
    pub one_photon_scale_hz: f64,
    pub two_photon_width_hz: f64,
    pub output_floor_w: f64,
    pub threshold_cap_w: f64,
}

impl Default for GainSection {
    fn default() -> Self {
        GainSection {
            coefficient: DEFAULT_GAIN_COEFFICIENT,
            saturation_power_w: DEFAULT_SATURATION_POWER,
            one_photon_scale_hz: DEFAULT_ONE_PHOTON_SCALE_HZ,
            two_photon_width_hz: DEFAULT_TWO_PHOTON_WIDTH_HZ,
            output_floor_w: DEFAULT_OUTPUT_FLOOR,
            threshold_cap_w: DEFAULT_THRESHOLD_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzerSection {
    pub fsr_hz: f64,
    /// FWHM
    pub linewidth_hz: f64,
    pub span_hz: f64,
    pub points: usize,
}

impl Default for AnalyzerSection {
    fn default() -> Self {
        let a = AnalyzerConfig::default();
        AnalyzerSection { fsr_hz: a.fsr_hz, linewidth_hz: a.linewidth_hz, span_hz: a.span_hz, points: a.points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchWindow {
    pub isotope: Isotope,
    pub start_hz: f64,
    pub stop_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub step_hz: f64,
    pub windows: Vec<SearchWindow>,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            step_hz: 1e6,
            windows: vec![
                SearchWindow { isotope: Isotope::Rb87, start_hz: -6e9, stop_hz: 8e9 },
                SearchWindow { isotope: Isotope::Rb85, start_hz: -6e9, stop_hz: 8e9 },
            ],
        }
    }
}

/// Sampling grids. `spectrum` (Hz) serves fig2a/fig2b, `power` (W) fig4 and
/// `scan` (Hz, pump detuning) the generic sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub spectrum: Grid,
    pub search: SearchSection,
    pub power: Grid,
    pub scan: Grid,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            spectrum: Grid { start: -6e9, stop: 8e9, points: 28_001 },
            search: SearchSection::default(),
            power: Grid { start: 0.0, stop: 0.150, points: 151 },
            scan: Grid { start: -6e9, stop: 8e9, points: 2801 },
        }
    }
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config { key: key.into(), reason: reason.into() }
}

fn check(ok: bool, key: &str, value: impl fmt::Display, expect: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, format!("{value} {expect}")))
    }
}

fn check_grid(grid: &Grid, key: &str) -> Result<(), CliError> {
    check(grid.start.is_finite(), &format!("{key}.start"), grid.start, "is not finite")?;
    check(
        grid.stop.is_finite() && grid.stop > grid.start,
        &format!("{key}.stop"),
        grid.stop,
        "must be finite and exceed start",
    )?;
    check(grid.points >= 2, &format!("{key}.points"), grid.points, "must be at least 2")
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::ReadConfig { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

/// Parses and validates config JSON.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        invalid(if key == "." { String::from("<root>") } else { key }, e.inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.cavity;
        check(c.length_m > 0.0 && c.length_m.is_finite(), "cavity.length_m", c.length_m, "must be positive")?;
        check(c.r1 > 0.0 && c.r1 <= 1.0, "cavity.R1", c.r1, "outside (0, 1]")?;
        check(c.r2 > 0.0 && c.r2 <= 1.0, "cavity.R2", c.r2, "outside (0, 1]")?;
        check(c.finesse > 0.0 && c.finesse.is_finite(), "cavity.finesse", c.finesse, "must be positive")?;
        calibrate_excess_loss(c.r1, c.r2, c.finesse).map_err(|e| invalid("cavity.finesse", e.to_string()))?;
        check(c.pzt_offset_m.is_finite(), "cavity.pzt_offset_m", c.pzt_offset_m, "is not finite")?;

        let cell = &self.cell;
        check(
            cell.temperature_k > 250.0 && cell.temperature_k < 500.0,
            "cell.temperature_k",
            cell.temperature_k,
            "outside (250, 500) K",
        )?;
        check(cell.length_m > 0.0, "cell.length_m", cell.length_m, "must be positive")?;
        check(cell.length_m < c.length_m, "cell.length_m", cell.length_m, "must be shorter than the cavity")?;
        check(!cell.isotopes.is_empty(), "cell.isotopes", "[]", "must list at least one isotope")?;
        let mut seen = HashSet::new();
        for (i, entry) in cell.isotopes.iter().enumerate() {
            check(
                seen.insert(entry.isotope),
                &format!("cell.isotopes[{i}].isotope"),
                entry.isotope,
                "is listed twice",
            )?;
            check(
                (0.0..=1.0).contains(&entry.abundance),
                &format!("cell.isotopes[{i}].abundance"),
                entry.abundance,
                "outside [0, 1]",
            )?;
        }
        let sum: f64 = cell.isotopes.iter().map(|e| e.abundance).sum();
        check((sum - 1.0).abs() <= 1e-12, "cell.isotopes", sum, "abundance sum differs from 1")?;
        check(cell.density_scale > 0.0, "cell.density_scale", cell.density_scale, "must be positive")?;
        check(
            cell.chi_prefactor >= 0.0 && cell.chi_prefactor.is_finite(),
            "cell.chi_prefactor",
            cell.chi_prefactor,
            "must be finite and non-negative",
        )?;
        check(cell.natural_width_hz > 0.0, "cell.natural_width_hz", cell.natural_width_hz, "must be positive")?;

        let in_cell = |iso: Isotope| cell.isotopes.iter().any(|e| e.isotope == iso);
        let p = &self.pump;
        check(in_cell(p.isotope), "pump.isotope", p.isotope, "is not in cell.isotopes")?;
        if let Some(d) = p.detuning_hz {
            check(d.is_finite(), "pump.detuning_hz", d, "is not finite")?;
        }
        check(p.power_w >= 0.0 && p.power_w.is_finite(), "pump.power_w", p.power_w, "must be non-negative")?;

        let g = &self.gain;
        check(g.coefficient >= 0.0 && g.coefficient.is_finite(), "gain.coefficient", g.coefficient, "must be non-negative")?;
        check(g.saturation_power_w > 0.0, "gain.saturation_power_w", g.saturation_power_w, "must be positive")?;
        check(g.one_photon_scale_hz > 0.0, "gain.one_photon_scale_hz", g.one_photon_scale_hz, "must be positive")?;
        check(g.two_photon_width_hz > 0.0, "gain.two_photon_width_hz", g.two_photon_width_hz, "must be positive")?;
        check(g.output_floor_w > 0.0, "gain.output_floor_w", g.output_floor_w, "must be positive")?;
        check(g.threshold_cap_w > 0.0, "gain.threshold_cap_w", g.threshold_cap_w, "must be positive")?;

        let a = &self.analyzer;
        check(a.linewidth_hz > 0.0, "analyzer.linewidth_hz", a.linewidth_hz, "must be positive")?;
        check(a.fsr_hz > a.linewidth_hz, "analyzer.fsr_hz", a.fsr_hz, "must exceed the linewidth")?;
        check(a.span_hz > 0.0, "analyzer.span_hz", a.span_hz, "must be positive")?;
        check(a.points >= 2, "analyzer.points", a.points, "must be at least 2")?;

        let grids = &self.grids;
        check_grid(&grids.spectrum, "grids.spectrum")?;
        check_grid(&grids.power, "grids.power")?;
        check(grids.power.start >= 0.0, "grids.power.start", grids.power.start, "must be non-negative")?;
        check_grid(&grids.scan, "grids.scan")?;
        let s = &grids.search;
        check(s.step_hz > 0.0, "grids.search.step_hz", s.step_hz, "must be positive")?;
        for (i, w) in s.windows.iter().enumerate() {
            let key = format!("grids.search.windows[{i}]");
            check(in_cell(w.isotope), &format!("{key}.isotope"), w.isotope, "is not in cell.isotopes")?;
            check(w.start_hz.is_finite(), &format!("{key}.start_hz"), w.start_hz, "is not finite")?;
            check(
                w.stop_hz.is_finite() && w.stop_hz > w.start_hz,
                &format!("{key}.stop_hz"),
                w.stop_hz,
                "must be finite and exceed start_hz",
            )?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<CavityGeometry, CliError> {
        let c = &self.cavity;
        let excess_survival =
            calibrate_excess_loss(c.r1, c.r2, c.finesse).map_err(|e| invalid("cavity.finesse", e.to_string()))?;
        Ok(CavityGeometry {
            length: c.length_m,
            cell_length: self.cell.length_m,
            r1: c.r1,
            r2: c.r2,
            excess_survival,
            pzt_offset: c.pzt_offset_m,
        })
    }

    pub fn cell(&self) -> Result<VaporCell, CliError> {
        let c = &self.cell;
        VaporCell::new(CellSpec {
            temperature: c.temperature_k,
            length: c.length_m,
            isotopes: c.isotopes.iter().map(|e| IsotopeSpec::new(e.isotope, e.abundance)).collect(),
            density_scale: c.density_scale,
            chi_prefactor: c.chi_prefactor,
            natural_width: hz_to_rad(c.natural_width_hz),
        })
        .map_err(|e| invalid("cell", e.to_string()))
    }

    pub fn gain_model(&self) -> GainModel {
        let g = &self.gain;
        GainModel {
            coefficient: g.coefficient,
            saturation_power: g.saturation_power_w,
            one_photon_scale: hz_to_rad(g.one_photon_scale_hz),
            two_photon_width: hz_to_rad(g.two_photon_width_hz),
        }
    }

    pub fn analyzer_config(&self) -> AnalyzerConfig {
        let a = &self.analyzer;
        AnalyzerConfig { fsr_hz: a.fsr_hz, linewidth_hz: a.linewidth_hz, span_hz: a.span_hz, points: a.points }
    }

    pub fn search_configs(&self) -> Vec<SearchConfig> {
        self.grids
            .search
            .windows
            .iter()
            .map(|w| SearchConfig {
                step_hz: self.grids.search.step_hz,
                threshold_cap: self.gain.threshold_cap_w,
                output_floor: self.gain.output_floor_w,
                ..SearchConfig::new(w.isotope, w.start_hz, w.stop_hz, self.pump.power_w)
            })
            .collect()
    }
}
