//! Physical constants and ⁸⁵Rb D1-line hyperfine structure.
//!
//! Numbers are CODATA 2018 for the constants and the standard ⁸⁵Rb D-line
//! reference tables for the transition data.

use std::f64::consts::TAU;

use crate::angular::{reduced_dipole, HalfInteger};

/// Fundamental constants (SI unless the name says otherwise) and the unit
/// conversions used at the data boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// μ_B / h in MHz/G.
    pub bohr_magneton_over_h: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Planck constant, J·s.
    pub h: f64,
    /// Speed of light, m/s.
    pub speed_of_light: f64,
    /// Vacuum permittivity, F/m.
    pub epsilon_0: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    bohr_magneton_over_h: 1.399_624_493_61,
    hbar: 1.054_571_817e-34,
    h: 6.626_070_15e-34,
    speed_of_light: 299_792_458.0,
    epsilon_0: 8.854_187_812_8e-12,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA_2018
    }
}

impl PhysicalConstants {
    /// μ_B/ħ expressed in rad/µs per mG.
    pub fn bohr_rate_per_mg(&self) -> f64 {
        // MHz/G -> cycles/µs per G -> rad/µs per mG
        TAU * self.bohr_magneton_over_h * 1e-3
    }

    /// (E/2)² in (V/cm)² produced by one mW/mm² of a travelling plane wave,
    /// from I = ½ c ε₀ E².
    pub fn quarter_field_sq_per_intensity(&self) -> f64 {
        let e_sq_si = 2.0 * 1e3 / (self.speed_of_light * self.epsilon_0); // (V/m)² per mW/mm²
        e_sq_si * 1e-4 / 4.0
    }

    /// Intensity in mW/mm² → (E/2)² in (V/cm)².
    pub fn intensity_to_quarter_field_sq(&self, intensity_mw_mm2: f64) -> f64 {
        intensity_mw_mm2 * self.quarter_field_sq_per_intensity()
    }

    /// (E/2)² in (V/cm)² → intensity in mW/mm².
    pub fn quarter_field_sq_to_intensity(&self, quarter_field_sq: f64) -> f64 {
        quarter_field_sq / self.quarter_field_sq_per_intensity()
    }
}

/// Hz → rad/µs.
pub fn hz_to_rad_per_us(hz: f64) -> f64 {
    TAU * hz * 1e-6
}

/// rad/µs → Hz.
pub fn rad_per_us_to_hz(rate: f64) -> f64 {
    rate * 1e6 / TAU
}

/// GHz → rad/µs.
pub fn ghz_to_rad_per_us(ghz: f64) -> f64 {
    TAU * ghz * 1e3
}

/// rad/µs → GHz.
pub fn rad_per_us_to_ghz(rate: f64) -> f64 {
    rate * 1e-3 / TAU
}

/// kHz → rad/µs.
pub fn khz_to_rad_per_us(khz: f64) -> f64 {
    TAU * khz * 1e-3
}

/// rad/µs → kHz.
pub fn rad_per_us_to_khz(rate: f64) -> f64 {
    rate * 1e3 / TAU
}

/// One hyperfine level of the ground or excited state.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperfineManifold {
    pub f: u32,
    /// Landé g_F (dimensionless).
    pub g_factor: f64,
    /// Energy offset from the fine-structure centroid, rad/µs.
    pub offset: f64,
}

impl HyperfineManifold {
    pub fn sublevels(&self) -> impl Iterator<Item = i32> + '_ {
        let f = self.f as i32;
        -f..=f
    }

    pub fn contains(&self, m_f: i32) -> bool {
        m_f.unsigned_abs() <= self.f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub f: u32,
    pub f_prime: u32,
    /// ω_{F'F}, rad/µs.
    pub omega: f64,
    /// ⟨F‖d‖F'⟩ in units of the fine-structure element d.
    pub reduced_dipole: f64,
}

impl Transition {
    /// |⟨F‖d‖F'⟩|² / d².
    pub fn strength(&self) -> f64 {
        self.reduced_dipole * self.reduced_dipole
    }
}

/// D1 hyperfine transitions keyed by (F, F').
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCatalog {
    pub entries: Vec<Transition>,
    /// Natural linewidth Γ of the excited state, rad/µs.
    pub linewidth: f64,
    /// |⟨J=1/2‖er‖J'=1/2⟩| in C·m.
    pub dipole_jj: f64,
    /// Ground-state hyperfine splitting, rad/µs.
    pub hyperfine_splitting: f64,
    /// Fine-structure splitting 5P1/2–5P3/2, rad/µs.
    pub fine_structure_splitting: f64,
}

impl TransitionCatalog {
    pub fn get(&self, f: u32, f_prime: u32) -> Option<&Transition> {
        self.entries
            .iter()
            .find(|t| t.f == f && t.f_prime == f_prime)
    }

    pub fn from_ground(&self, f: u32) -> impl Iterator<Item = &Transition> {
        self.entries.iter().filter(move |t| t.f == f)
    }

    /// Prefactor of the scalar polarizability term for (F, F'),
    /// ⅔|⟨F‖d‖F'⟩|²/d².
    pub fn scalar_weight(&self, f: u32, f_prime: u32) -> Option<f64> {
        self.get(f, f_prime).map(|t| 2.0 * t.strength() / 3.0)
    }
}

/// Everything downstream needs to know about the atom.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSystem {
    pub name: String,
    pub constants: PhysicalConstants,
    pub nuclear_spin: HalfInteger,
    pub ground: Vec<HyperfineManifold>,
    pub excited: Vec<HyperfineManifold>,
    /// D1 fine-structure line centroid, rad/µs.
    pub line_centroid: f64,
    pub catalog: TransitionCatalog,
    /// (F, F') of the |1⟩→|3⟩ transition that detunings are referenced to.
    pub reference_transition: (u32, u32),
}

impl AtomSystem {
    pub fn ground(&self, f: u32) -> Option<&HyperfineManifold> {
        self.ground.iter().find(|m| m.f == f)
    }

    /// The (F=2, F=3) pair used for storage, lower manifold first.
    pub fn storage_pair(&self) -> (&HyperfineManifold, &HyperfineManifold) {
        let lower = self
            .ground
            .iter()
            .min_by(|a, b| a.offset.total_cmp(&b.offset))
            .expect("ground levels");
        let upper = self
            .ground
            .iter()
            .max_by(|a, b| a.offset.total_cmp(&b.offset))
            .expect("ground levels");
        (lower, upper)
    }

    /// Ground hyperfine splitting in GHz.
    pub fn hyperfine_splitting_ghz(&self) -> f64 {
        rad_per_us_to_ghz(self.catalog.hyperfine_splitting)
    }

    /// ω of the reference transition, rad/µs.
    pub fn reference_omega(&self) -> f64 {
        let (f, fp) = self.reference_transition;
        self.catalog
            .get(f, fp)
            .expect("reference transition in catalog")
            .omega
    }

    /// ω_{F'F} − ω_laser for a laser detuned by `detuning` from the
    /// reference transition. Evaluated from the hyperfine offsets so that
    /// no precision is lost against the optical frequency.
    pub fn transition_detuning(&self, f: u32, f_prime: u32, detuning: f64) -> Option<f64> {
        let (rf, rfp) = self.reference_transition;
        let g = self.ground(f)?;
        let e = self.excited.iter().find(|m| m.f == f_prime)?;
        let rg = self.ground(rf)?;
        let re = self.excited.iter().find(|m| m.f == rfp)?;
        Some((e.offset - g.offset) - (re.offset - rg.offset) - detuning)
    }

    /// Differential g-factor g_FF' = m_F' g_F' − m_F g_F for a storage pair
    /// |F_low, m_F⟩ ↔ |F_high, m_F'⟩.
    pub fn differential_g(&self, m_f: i32, m_f_prime: i32) -> f64 {
        let (low, high) = self.storage_pair();
        f64::from(m_f_prime) * high.g_factor - f64::from(m_f) * low.g_factor
    }
}

/// ⁸⁵Rb with its D1 (5S1/2 → 5P1/2) hyperfine structure.
pub fn load_rb85() -> AtomSystem {
    let constants = CODATA_2018;
    let nuclear_spin = HalfInteger::from_twice(5);
    let half = HalfInteger::HALF;

    // 5S1/2: A = 1.011 910 813 GHz; 5P1/2: A = 120.527 MHz.
    let ground = vec![
        HyperfineManifold {
            f: 2,
            g_factor: -1.0 / 3.0,
            offset: ghz_to_rad_per_us(-1.770_843_922_8),
        },
        HyperfineManifold {
            f: 3,
            g_factor: 1.0 / 3.0,
            offset: ghz_to_rad_per_us(1.264_888_516_3),
        },
    ];
    let excited = vec![
        HyperfineManifold {
            f: 2,
            g_factor: -1.0 / 9.0,
            offset: ghz_to_rad_per_us(-0.210_923),
        },
        HyperfineManifold {
            f: 3,
            g_factor: 1.0 / 9.0,
            offset: ghz_to_rad_per_us(0.150_659),
        },
    ];
    let line_centroid = ghz_to_rad_per_us(377_107.385_690);

    let mut entries = Vec::new();
    for g in &ground {
        for e in &excited {
            let fg = HalfInteger::int(g.f as i32);
            let fe = HalfInteger::int(e.f as i32);
            entries.push(Transition {
                f: g.f,
                f_prime: e.f,
                omega: line_centroid + e.offset - g.offset,
                reduced_dipole: reduced_dipole(fg, fe, half, half, nuclear_spin, 1.0),
            });
        }
    }

    let catalog = TransitionCatalog {
        entries,
        linewidth: hz_to_rad_per_us(5.7500e6),
        dipole_jj: 2.5377e-29,
        hyperfine_splitting: ground[1].offset - ground[0].offset,
        fine_structure_splitting: ghz_to_rad_per_us(7_123.0),
    };

    AtomSystem {
        name: "Rb85".to_owned(),
        constants,
        nuclear_spin,
        ground,
        excited,
        line_centroid,
        catalog,
        reference_transition: (2, 3),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn bohr_magneton_is_codata() {
        let c = PhysicalConstants::default();
        assert_relative_eq!(c.bohr_magneton_over_h, 1.399624, max_relative = 1e-6);
    }

    #[test]
    fn ground_g_factors() {
        let rb = load_rb85();
        assert_eq!(rb.ground(3).unwrap().g_factor, 1.0 / 3.0);
        assert_eq!(rb.ground(2).unwrap().g_factor, -1.0 / 3.0);
        assert!(rb.ground(2).unwrap().g_factor * rb.ground(3).unwrap().g_factor < 0.0);
        assert_eq!(
            rb.ground(2).unwrap().sublevels().collect::<Vec<_>>(),
            vec![-2, -1, 0, 1, 2]
        );
    }

    #[test]
    fn hyperfine_splitting_is_3_036_ghz() {
        let rb = load_rb85();
        assert_abs_diff_eq!(rb.hyperfine_splitting_ghz(), 3.036, epsilon = 1e-3);
        for fp in [2, 3] {
            let w2 = rb.catalog.get(2, fp).unwrap().omega;
            let w3 = rb.catalog.get(3, fp).unwrap().omega;
            assert_abs_diff_eq!(rad_per_us_to_ghz(w2 - w3), 3.036, epsilon = 1e-3);
        }
    }

    #[test]
    fn scalar_prefactors_match_reference_values() {
        let rb = load_rb85();
        let w = |f, fp| rb.catalog.scalar_weight(f, fp).unwrap();
        assert_abs_diff_eq!(w(2, 2), 0.148, epsilon = 1e-3);
        assert_abs_diff_eq!(w(2, 3), 0.518, epsilon = 1e-3);
        assert_abs_diff_eq!(w(3, 2), 0.37, epsilon = 1e-3);
        assert_abs_diff_eq!(w(3, 3), 0.296, epsilon = 1e-3);
    }

    #[test]
    fn scalar_sum_rule() {
        let rb = load_rb85();
        for f in [2, 3] {
            let total: f64 = rb
                .catalog
                .from_ground(f)
                .map(|t| 2.0 * t.strength() / 3.0)
                .sum();
            assert_abs_diff_eq!(total, 2.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn detuning_offsets_are_consistent_with_absolute_frequencies() {
        let rb = load_rb85();
        let delta = ghz_to_rad_per_us(25.6);
        let laser = rb.reference_omega() + delta;
        for t in &rb.catalog.entries {
            let d = rb.transition_detuning(t.f, t.f_prime, delta).unwrap();
            assert_relative_eq!(d, t.omega - laser, max_relative = 1e-6);
        }
    }

    #[test]
    fn quarter_field_at_three_mw_per_mm2() {
        let c = PhysicalConstants::default();
        // 3 mW/mm² = 3000 W/m² -> E² = 2I/(cε0) = 2.26e6 (V/m)² -> (E/2)² = 56.5 (V/cm)²
        assert_relative_eq!(
            c.intensity_to_quarter_field_sq(3.0),
            56.51,
            max_relative = 1e-3
        );
    }

    proptest! {
        #[test]
        fn conversions_round_trip(x in -1e12f64..1e12) {
            let c = PhysicalConstants::default();
            let tol = 1e-12 * x.abs().max(1e-300);
            prop_assert!((rad_per_us_to_hz(hz_to_rad_per_us(x)) - x).abs() <= tol);
            prop_assert!((rad_per_us_to_ghz(ghz_to_rad_per_us(x)) - x).abs() <= tol);
            prop_assert!((rad_per_us_to_khz(khz_to_rad_per_us(x)) - x).abs() <= tol);
            prop_assert!((c.quarter_field_sq_to_intensity(c.intensity_to_quarter_field_sq(x)) - x).abs() <= tol);
        }
    }
}
