//! Doppler-broadened D2 susceptibility of a natural ⁸⁵Rb/⁸⁷Rb vapor.
//!
//! Each ground hyperfine level contributes one Voigt line,
//!
//! ```text
//! χ(Δ) = i·(C_χ·n/u)·Σ abundance·strength·√π·w((Δ − Δ_line + iΓ/2)/(k·u))
//! ```
//!
//! with `u = √(2k_BT/m)` the most probable speed and `k` the reference wave
//! number. The prefactor `C_χ` (m⁴/s) is a calibration constant, see
//! [`calibrate_chi_prefactor`].

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, PASCAL_PER_TORR, SPEED_OF_LIGHT};
use crate::faddeeva::{w_derivative, w_upper};
use crate::rb_d2::{self, IsotopeData, NATURAL_WIDTH_HZ, REFERENCE_FREQUENCY};
use crate::{Error, Result};

/// Susceptibility prefactor that puts the weakest band (⁸⁷Rb F=1) of the
/// natural mixture at a single-pass optical depth of 7.5 at 105 °C in a
/// 7.5 cm cell. Produced by [`calibrate_chi_prefactor`]; a unit test keeps the
/// two in sync.
pub const DEFAULT_CHI_PREFACTOR: f64 = 2.209_212e-21;

/// Single-pass optical depth of the weakest band used for the default calibration.
pub const DEFAULT_WEAKEST_BAND_DEPTH: f64 = 7.5;

const DENSITY_WINDOW_K: (f64, f64) = (250.0, 500.0);

/// Reference angular frequency ω_ref (rad/s).
pub fn reference_omega() -> f64 {
    TAU * REFERENCE_FREQUENCY
}

/// Reference wave number k = ω_ref/c (1/m).
pub fn reference_wavenumber() -> f64 {
    reference_omega() / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Isotope {
    #[serde(rename = "Rb85", alias = "85")]
    Rb85,
    #[serde(rename = "Rb87", alias = "87")]
    Rb87,
}

impl Isotope {
    pub fn mass_number(self) -> u32 {
        match self {
            Isotope::Rb85 => 85,
            Isotope::Rb87 => 87,
        }
    }

    fn data(self) -> &'static IsotopeData {
        match self {
            Isotope::Rb85 => &rb_d2::RB85,
            Isotope::Rb87 => &rb_d2::RB87,
        }
    }

    /// Ground hyperfine splitting ω₁₂ (rad/s).
    pub fn ground_splitting(self) -> f64 {
        TAU * self.data().ground_splitting()
    }

    pub fn natural_abundance(self) -> f64 {
        self.data().abundance
    }

    /// Line centers (rad/s from reference) of the transitions out of the lower
    /// and upper ground hyperfine levels, in that order. The lower ground level
    /// has the higher transition frequency.
    pub fn band_centers(self) -> (f64, f64) {
        let d = self.data();
        let offset = d.d2_frequency - REFERENCE_FREQUENCY;
        (
            TAU * (offset - d.ground[0].1),
            TAU * (offset - d.ground[1].1),
        )
    }
}

impl fmt::Display for Isotope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rb{}", self.mass_number())
    }
}

impl FromStr for Isotope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "85" | "Rb85" | "85Rb" | "rb85" => Ok(Isotope::Rb85),
            "87" | "Rb87" | "87Rb" | "rb87" => Ok(Isotope::Rb87),
            other => Err(Error::UnknownIsotope(other.to_string())),
        }
    }
}

/// Static constants of one isotope as it appears in a cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotopeSpec {
    pub isotope: Isotope,
    pub abundance: f64,
    /// kg
    pub mass: f64,
    /// ω₁₂, rad/s
    pub ground_splitting: f64,
    /// D2 centroid relative to the global reference, rad/s
    pub d2_center_offset: f64,
}

impl IsotopeSpec {
    pub fn new(isotope: Isotope, abundance: f64) -> Self {
        let d = isotope.data();
        IsotopeSpec {
            isotope,
            abundance,
            mass: d.mass(),
            ground_splitting: TAU * d.ground_splitting(),
            d2_center_offset: TAU * (d.d2_frequency - REFERENCE_FREQUENCY),
        }
    }

    /// Naturally mixed rubidium.
    pub fn natural_mixture() -> Vec<IsotopeSpec> {
        [Isotope::Rb85, Isotope::Rb87]
            .into_iter()
            .map(|iso| IsotopeSpec::new(iso, iso.natural_abundance()))
            .collect()
    }

    /// Isotopically pure cell.
    pub fn enriched(isotope: Isotope) -> Vec<IsotopeSpec> {
        vec![IsotopeSpec::new(isotope, 1.0)]
    }
}

/// One Doppler band: a ground hyperfine level driven on D2 with the excited
/// hyperfine structure collapsed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicLine {
    pub isotope: Isotope,
    /// Ground-state F quantum number.
    pub lower_f: u8,
    /// rad/s from the global reference.
    pub center_detuning: f64,
    /// Fraction of the isotope's population in this ground level.
    pub relative_strength: f64,
    /// Γ, rad/s
    pub natural_width: f64,
}

/// Builds the four-band (for the natural mixture) line table, sorted by frequency.
pub fn line_table(isotopes: &[IsotopeSpec], natural_width: f64) -> Result<Vec<AtomicLine>> {
    if isotopes.is_empty() {
        return Err(Error::NoIsotopes);
    }
    if !(natural_width > 0.0) {
        return Err(Error::invalid("natural_width", "must be positive"));
    }
    let mut lines = Vec::with_capacity(2 * isotopes.len());
    for spec in isotopes {
        let d = spec.isotope.data();
        let total_g: u32 = d.ground.iter().map(|g| g.2).sum();
        for &(f, shift, degeneracy) in &d.ground {
            lines.push(AtomicLine {
                isotope: spec.isotope,
                lower_f: f,
                center_detuning: spec.d2_center_offset - TAU * shift,
                relative_strength: degeneracy as f64 / total_g as f64,
                natural_width,
            });
        }
    }
    lines.sort_by(|a, b| a.center_detuning.total_cmp(&b.center_detuning));
    Ok(lines)
}

/// Saturated vapor density (m⁻³) from log₁₀P[torr] = 7.193 − 4040/T.
pub fn number_density(temperature: f64) -> Result<f64> {
    let (lo, hi) = DENSITY_WINDOW_K;
    if !(temperature > lo && temperature < hi) {
        return Err(Error::TemperatureOutOfRange(temperature));
    }
    let torr = 10f64.powf(7.193 - 4040.0 / temperature);
    Ok(torr * PASCAL_PER_TORR / (BOLTZMANN * temperature))
}

/// Most probable thermal speed √(2k_BT/m).
pub fn thermal_speed(temperature: f64, mass: f64) -> f64 {
    (2.0 * BOLTZMANN * temperature / mass).sqrt()
}

/// Anything with a complex linear susceptibility over detuning.
pub trait Medium: Sync {
    fn susceptibility(&self, detuning: f64) -> Complex64;

    /// dχ/dΔ (s).
    fn susceptibility_slope(&self, detuning: f64) -> Complex64;
}

/// Empty cell.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vacuum;

impl Medium for Vacuum {
    fn susceptibility(&self, _detuning: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn susceptibility_slope(&self, _detuning: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// Parameters of a vapor cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSpec {
    /// K
    pub temperature: f64,
    /// m
    pub length: f64,
    pub isotopes: Vec<IsotopeSpec>,
    pub density_scale: f64,
    /// C_χ, m⁴/s
    pub chi_prefactor: f64,
    /// Γ, rad/s
    pub natural_width: f64,
}

impl Default for CellSpec {
    fn default() -> Self {
        CellSpec {
            temperature: 378.15,
            length: 0.075,
            isotopes: IsotopeSpec::natural_mixture(),
            density_scale: 1.0,
            chi_prefactor: DEFAULT_CHI_PREFACTOR,
            natural_width: TAU * NATURAL_WIDTH_HZ,
        }
    }
}

#[derive(Debug, Clone)]
struct LineTerm {
    center: f64,
    /// C_χ·n·abundance·strength·√π/u
    amplitude: f64,
    /// k·u
    doppler: f64,
    half_width: f64,
}

/// A validated vapor cell with its line table and Voigt coefficients resolved.
#[derive(Debug, Clone)]
pub struct VaporCell {
    spec: CellSpec,
    lines: Vec<AtomicLine>,
    density: f64,
    terms: Vec<LineTerm>,
}

impl VaporCell {
    pub fn new(spec: CellSpec) -> Result<Self> {
        if !(spec.temperature > 0.0) {
            return Err(Error::invalid("temperature", "must be positive"));
        }
        if !(spec.length > 0.0) {
            return Err(Error::invalid("length", "must be positive"));
        }
        if !(spec.density_scale > 0.0) {
            return Err(Error::invalid("density_scale", "must be positive"));
        }
        if !(spec.chi_prefactor >= 0.0) || !spec.chi_prefactor.is_finite() {
            return Err(Error::invalid("chi_prefactor", "must be finite and non-negative"));
        }
        let abundance_sum: f64 = spec.isotopes.iter().map(|i| i.abundance).sum();
        if spec.isotopes.iter().any(|i| !(i.abundance >= 0.0)) {
            return Err(Error::invalid("isotopes", "abundances must be non-negative"));
        }
        if !spec.isotopes.is_empty() && (abundance_sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "isotopes",
                format!("abundances sum to {abundance_sum}, expected 1"),
            ));
        }
        let lines = line_table(&spec.isotopes, spec.natural_width)?;
        let density = number_density(spec.temperature)? * spec.density_scale;
        let k = reference_wavenumber();
        let terms = lines
            .iter()
            .map(|line| {
                let iso = spec
                    .isotopes
                    .iter()
                    .find(|i| i.isotope == line.isotope)
                    .expect("line table built from these isotopes");
                let u = thermal_speed(spec.temperature, iso.mass);
                LineTerm {
                    center: line.center_detuning,
                    amplitude: spec.chi_prefactor * density / u
                        * iso.abundance
                        * line.relative_strength
                        * PI.sqrt(),
                    doppler: k * u,
                    half_width: 0.5 * line.natural_width,
                }
            })
            .collect();
        Ok(VaporCell { spec, lines, density, terms })
    }

    /// Natural-abundance cell with default parameters at the given temperature.
    pub fn natural(temperature: f64) -> Result<Self> {
        VaporCell::new(CellSpec { temperature, ..CellSpec::default() })
    }

    pub fn spec(&self) -> &CellSpec {
        &self.spec
    }

    pub fn lines(&self) -> &[AtomicLine] {
        &self.lines
    }

    pub fn temperature(&self) -> f64 {
        self.spec.temperature
    }

    pub fn length(&self) -> f64 {
        self.spec.length
    }

    /// Total atomic density including `density_scale` (m⁻³).
    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn absorption_coefficient(&self, detuning: f64) -> f64 {
        absorption_coefficient(detuning, self)
    }

    pub fn refractive_index(&self, detuning: f64) -> f64 {
        refractive_index(detuning, self)
    }

    /// Single-pass intensity transmission e^(−αL).
    pub fn single_pass_transmission(&self, detuning: f64) -> f64 {
        (-self.absorption_coefficient(detuning) * self.spec.length).exp()
    }
}

impl Medium for VaporCell {
    fn susceptibility(&self, detuning: f64) -> Complex64 {
        let sum: Complex64 = self
            .terms
            .iter()
            .map(|t| {
                let z = Complex64::new(detuning - t.center, t.half_width) / t.doppler;
                t.amplitude * w_upper(z)
            })
            .sum();
        Complex64::i() * sum
    }

    fn susceptibility_slope(&self, detuning: f64) -> Complex64 {
        let sum: Complex64 = self
            .terms
            .iter()
            .map(|t| {
                let z = Complex64::new(detuning - t.center, t.half_width) / t.doppler;
                t.amplitude * w_derivative(z, w_upper(z)) / t.doppler
            })
            .sum();
        Complex64::i() * sum
    }
}

/// Intensity absorption coefficient α = (ω/c)·Im χ (1/m).
pub fn absorption_coefficient<M: Medium + ?Sized>(detuning: f64, medium: &M) -> f64 {
    let omega = reference_omega() + detuning;
    omega / SPEED_OF_LIGHT * medium.susceptibility(detuning).im
}

/// Weak-susceptibility refractive index n = 1 + Re χ/2.
pub fn refractive_index<M: Medium + ?Sized>(detuning: f64, medium: &M) -> f64 {
    1.0 + 0.5 * medium.susceptibility(detuning).re
}

/// Returns the C_χ for which the weakest band center of `spec` has single-pass
/// optical depth `target_depth` (the rest of `spec` is kept).
pub fn calibrate_chi_prefactor(spec: &CellSpec, target_depth: f64) -> Result<f64> {
    if !(target_depth > 0.0) {
        return Err(Error::invalid("target_depth", "must be positive"));
    }
    let unit = VaporCell::new(CellSpec { chi_prefactor: 1.0, ..spec.clone() })?;
    let weakest = unit
        .lines()
        .iter()
        .map(|l| unit.absorption_coefficient(l.center_detuning) * unit.length())
        .fold(f64::INFINITY, f64::min);
    Ok(target_depth / weakest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hz_to_rad;

    fn single_line_cell() -> VaporCell {
        // ⁸⁷Rb alone: its two bands sit 6.8 GHz apart, so each is isolated.
        VaporCell::new(CellSpec {
            isotopes: IsotopeSpec::enriched(Isotope::Rb87),
            ..CellSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn rb87_only_gives_two_lines_split_by_6835_mhz() {
        let lines = line_table(&IsotopeSpec::enriched(Isotope::Rb87), 1.0).unwrap();
        assert_eq!(lines.len(), 2);
        let split = lines[1].center_detuning - lines[0].center_detuning;
        assert!((split - hz_to_rad(6.835e9)).abs() < hz_to_rad(1e6));
        assert_eq!((lines[0].lower_f, lines[1].lower_f), (2, 1));
    }

    #[test]
    fn rb85_only_gives_two_lines_split_by_3035_mhz() {
        let lines = line_table(&IsotopeSpec::enriched(Isotope::Rb85), 1.0).unwrap();
        assert_eq!(lines.len(), 2);
        let split = lines[1].center_detuning - lines[0].center_detuning;
        assert!((split - hz_to_rad(3.035e9)).abs() < hz_to_rad(1e6));
        assert_eq!((lines[0].lower_f, lines[1].lower_f), (3, 2));
    }

    #[test]
    fn natural_mixture_band_order() {
        let lines = line_table(&IsotopeSpec::natural_mixture(), 1.0).unwrap();
        let tags: Vec<_> = lines.iter().map(|l| (l.isotope, l.lower_f)).collect();
        assert_eq!(
            tags,
            vec![
                (Isotope::Rb87, 2),
                (Isotope::Rb85, 3),
                (Isotope::Rb85, 2),
                (Isotope::Rb87, 1)
            ]
        );
        // Cross-check against tabulated D2 transition centroids (GHz from the
        // ⁸⁷Rb centroid): −2.563, −1.343, +1.693, +4.272.
        let expect = [-2.563_006, -1.342_984, 1.692_749, 4.271_677];
        for (line, e) in lines.iter().zip(expect) {
            assert!((crate::rad_to_hz(line.center_detuning) / 1e9 - e).abs() < 1e-5);
        }
        for iso in [Isotope::Rb85, Isotope::Rb87] {
            let own: Vec<_> = lines.iter().filter(|l| l.isotope == iso).collect();
            let split = own[1].center_detuning - own[0].center_detuning;
            let w12 = iso.ground_splitting();
            assert!(((split - w12) / w12).abs() < 1e-6);
            let s: f64 = own.iter().map(|l| l.relative_strength).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_isotope_list_is_rejected() {
        assert_eq!(line_table(&[], 1.0), Err(Error::NoIsotopes));
    }

    #[test]
    fn unknown_isotope_tag_is_rejected() {
        assert_eq!("Rb86".parse::<Isotope>(), Err(Error::UnknownIsotope("Rb86".into())));
        assert_eq!("87".parse::<Isotope>(), Ok(Isotope::Rb87));
    }

    #[test]
    fn number_density_hand_values() {
        // log10 P = 7.193 − 4040/378.15 = −3.49062 → P = 3.2315e-4 torr
        // n = 3.2315e-4 · 133.322 / (1.380649e-23 · 378.15) = 8.252e18
        let n = number_density(378.15).unwrap();
        assert!((n / 8.252e18 - 1.0).abs() < 1e-3, "{n:e}");
        // log10 P = −6.58811 → 2.5812e-7 torr → 8.503e15
        let n = number_density(293.15).unwrap();
        assert!((n / 8.503e15 - 1.0).abs() < 1e-3, "{n:e}");
    }

    #[test]
    fn number_density_window() {
        assert_eq!(number_density(240.0), Err(Error::TemperatureOutOfRange(240.0)));
        assert_eq!(number_density(500.0), Err(Error::TemperatureOutOfRange(500.0)));
        assert!(number_density(300.0).unwrap() < number_density(301.0).unwrap());
    }

    #[test]
    fn cell_rejects_bad_abundances() {
        let mut spec = CellSpec::default();
        spec.isotopes[0].abundance = 0.5;
        assert!(matches!(VaporCell::new(spec), Err(Error::InvalidParameter { name: "isotopes", .. })));
    }

    #[test]
    fn dispersion_vanishes_at_isolated_line_center() {
        let cell = single_line_cell();
        for t in &cell.terms {
            let chi = Complex64::i() * t.amplitude * w_upper(Complex64::new(0.0, t.half_width) / t.doppler);
            assert!(chi.re.abs() <= 1e-9 * chi.im.abs(), "{chi}");
        }
    }

    #[test]
    fn far_detuned_limit() {
        let cell = VaporCell::natural(378.15).unwrap();
        for d in [-500e9, 500e9] {
            let chi = cell.susceptibility(hz_to_rad(d));
            assert!(chi.im < 1e-9, "{chi}");
            // The dispersive wing falls off as 1/Δ.
            let far = cell.susceptibility(hz_to_rad(10.0 * d));
            assert!((far.re * 10.0 / chi.re - 1.0).abs() < 0.01, "{chi} {far}");
        }
        assert!(cell.susceptibility(hz_to_rad(5e14)).norm() < 1e-9);
    }

    #[test]
    fn rb87_f2_band_is_opaque_at_105c() {
        let cell = VaporCell::natural(378.15).unwrap();
        let center = Isotope::Rb87.band_centers().1;
        assert!(cell.single_pass_transmission(center) < 1e-3);
    }

    #[test]
    fn vacuum_has_unit_index_and_no_absorption() {
        assert_eq!(absorption_coefficient(1e9, &Vacuum), 0.0);
        assert_eq!(refractive_index(1e9, &Vacuum), 1.0);
    }

    #[test]
    fn default_prefactor_matches_calibration() {
        let c = calibrate_chi_prefactor(&CellSpec::default(), DEFAULT_WEAKEST_BAND_DEPTH).unwrap();
        assert!((c / DEFAULT_CHI_PREFACTOR - 1.0).abs() < 1e-5, "{c:e}");
    }

    #[test]
    fn voigt_symmetry_about_single_line() {
        let cell = single_line_cell();
        let t = &cell.terms[0];
        let term = |d: f64| Complex64::i() * t.amplitude * w_upper(Complex64::new(d, t.half_width) / t.doppler);
        for x in [1e5, 3e7, 2e8, 7e8] {
            let x = hz_to_rad(x);
            let (up, dn) = (term(x), term(-x));
            assert!((up.im - dn.im).abs() <= 1e-9 * up.im.abs());
            assert!((up.re + dn.re).abs() <= 1e-9 * up.re.abs());
        }
    }

    #[test]
    fn doppler_width_at_105c() {
        // Gaussian FWHM 2√ln2·k·u/2π ≈ 574 MHz for ⁸⁷Rb at 378 K.
        let cell = single_line_cell();
        let center = cell.lines()[0].center_detuning;
        let peak = cell.susceptibility(center).im;
        let half = |sign: f64| {
            let f = |d: f64| cell.susceptibility(center + sign * d).im - 0.5 * peak;
            crate::roots::bisect(f, 0.0, hz_to_rad(2e9), 1.0, 200).unwrap()
        };
        let fwhm = crate::rad_to_hz(half(1.0) + half(-1.0));
        assert!((fwhm / 574e6 - 1.0).abs() < 0.05, "{fwhm:e}");
    }

    #[test]
    fn passive_everywhere_on_dense_grid() {
        let cell = VaporCell::natural(378.15).unwrap();
        let n = 100_000;
        for i in 0..n {
            let d = hz_to_rad(-20e9 + 40e9 * i as f64 / (n - 1) as f64);
            assert!(cell.susceptibility(d).im >= 0.0);
        }
    }

    #[test]
    fn chi_is_linear_in_density_scale() {
        let a = VaporCell::natural(378.15).unwrap();
        let b = VaporCell::new(CellSpec { density_scale: 2.0, ..CellSpec::default() }).unwrap();
        for d in [-3e9, -1.3e9, 0.2e9, 4.27e9] {
            let d = hz_to_rad(d);
            let (ca, cb) = (a.susceptibility(d), b.susceptibility(d));
            assert!((cb - 2.0 * ca).norm() <= 1e-12 * ca.norm());
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let cell = VaporCell::natural(378.15).unwrap();
        for d in [-2.9e9, -0.5e9, 1.9e9, 6e9] {
            let d = hz_to_rad(d);
            let h = hz_to_rad(1e3);
            let fd = (cell.susceptibility(d + h) - cell.susceptibility(d - h)) / (2.0 * h);
            let an = cell.susceptibility_slope(d);
            assert!((an - fd).norm() <= 1e-6 * an.norm(), "{an} vs {fd}");
        }
    }
}
