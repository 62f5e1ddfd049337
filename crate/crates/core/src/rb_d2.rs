//! Rubidium D2 (5S₁/₂ → 5P₃/₂) spectroscopic constants.
//!
//! Source: D. A. Steck, "Rubidium 85 D Line Data" and "Rubidium 87 D Line
//! Data" (revision 2.3.x), tables of isotope masses, natural abundances,
//! D2 transition frequencies and ground-state hyperfine shifts. Shifts are
//! quoted relative to each isotope's hyperfine-free ground level; a positive
//! shift raises the ground level and therefore lowers the transition frequency
//! out of it.
//!
//! The excited 5P₃/₂ hyperfine structure (at most ~270 MHz wide for ⁸⁷Rb) is
//! collapsed onto the hyperfine-free centroid, so each ground level carries a
//! single Doppler band and the two bands of one isotope are separated by
//! exactly its ground splitting.

use crate::constants::ATOMIC_MASS_UNIT;

/// ⁸⁷Rb D2 centroid frequency (Hz); global frequency reference.
pub const REFERENCE_FREQUENCY: f64 = 384.230_484_468_5e12;

/// D2 natural linewidth Γ/2π (Hz).
pub const NATURAL_WIDTH_HZ: f64 = 6.0666e6;

pub(crate) struct IsotopeData {
    pub mass_u: f64,
    pub abundance: f64,
    pub d2_frequency: f64,
    /// (ground F, hyperfine shift in Hz, degeneracy 2F+1)
    pub ground: [(u8, f64, u32); 2],
}

pub(crate) const RB85: IsotopeData = IsotopeData {
    mass_u: 84.911_789_738,
    abundance: 0.7217,
    d2_frequency: 384.230_406_373e12,
    ground: [(2, -1.770_843_922_85e9, 5), (3, 1.264_888_516_3e9, 7)],
};

pub(crate) const RB87: IsotopeData = IsotopeData {
    mass_u: 86.909_180_527,
    abundance: 0.2783,
    d2_frequency: 384.230_484_468_5e12,
    ground: [(1, -4.271_676_631_815e9, 3), (2, 2.563_005_979_089e9, 5)],
};

impl IsotopeData {
    pub fn mass(&self) -> f64 {
        self.mass_u * ATOMIC_MASS_UNIT
    }

    /// Ground hyperfine splitting (Hz).
    pub fn ground_splitting(&self) -> f64 {
        (self.ground[1].1 - self.ground[0].1).abs()
    }
}
