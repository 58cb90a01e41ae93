//! Scenario configuration. Every physical key carries its unit; unknown keys
//! are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use starkmem::compensator::DEFAULT_INTENSITY_CAP;
use starkmem::export::read_pairs;
use starkmem::memory::LifetimeSearch;
use starkmem::slm::{DEFAULT_SUPPORT_MM, DEFAULT_WAIST_MM};
use starkmem::{
    load_rb85, AtomSystem, BeamConfig, EnsembleConfig, Envelope, FieldProfile, IntensityProfile,
    Scheme,
};

/// Bad config file, flag or value. Exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub atom: AtomSection,
    pub beam: BeamSection,
    pub field: FieldSection,
    pub ensemble: EnsembleSection,
    pub run: RunSection,
    pub heatmap: HeatmapSection,
    pub montecarlo: MonteCarloSection,
    pub compensate: CompensateSection,
    pub slm: SlmSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomSection {
    pub species: String,
}

impl Default for AtomSection {
    fn default() -> Self {
        AtomSection {
            species: "rb85".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    #[serde(rename = "detuning_GHz")]
    pub detuning_ghz: f64,
    #[serde(rename = "intensity_mW_mm2")]
    pub intensity: f64,
    #[serde(rename = "intensity_c1_mW_mm2_per_cm")]
    pub intensity_c1: f64,
    #[serde(rename = "intensity_c2_mW_mm2_per_cm2")]
    pub intensity_c2: f64,
    pub polarization_q: f64,
    pub angle_deg: f64,
    pub zeta_dot_b_sq: f64,
    pub field_scale: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection {
            detuning_ghz: 25.6,
            intensity: 3.0,
            intensity_c1: 0.0,
            intensity_c2: 0.0,
            polarization_q: 1.0,
            angle_deg: 0.0,
            zeta_dot_b_sq: 0.0,
            field_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    #[serde(rename = "b0_mG")]
    pub b0: f64,
    #[serde(rename = "b1_mG_per_cm")]
    pub b1: f64,
    #[serde(rename = "b2_mG_per_cm2")]
    pub b2: f64,
    /// CSV with columns z_cm, b_mG added on top of the polynomial.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_csv: Option<PathBuf>,
    /// CSV with a b0_mG column, one row per cycle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Eit,
    Raman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeName {
    Gaussian,
    Exponential,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub center_cm: f64,
    pub sigma_cm: f64,
    pub scheme: SchemeName,
    pub q_storage: i32,
    pub m_f: i32,
    pub m_f_prime: i32,
    /// Weights for m_F = −F..F; equal when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub populations: Option<Vec<f64>>,
    pub envelope: EnvelopeName,
    #[serde(rename = "envelope_T_us")]
    pub envelope_t_us: f64,
    pub envelope_rate_per_us: f64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            center_cm: 0.0,
            sigma_cm: 0.625,
            scheme: SchemeName::Eit,
            q_storage: 1,
            m_f: 1,
            m_f_prime: 1,
            populations: None,
            envelope: EnvelopeName::Gaussian,
            envelope_t_us: 100.0,
            envelope_rate_per_us: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub t_max_us: f64,
    pub t_points: usize,
    pub seed: u64,
    pub support_cm: [f64; 2],
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            t_max_us: 300.0,
            t_points: 601,
            seed: 0,
            support_cm: [-1.25, 1.25],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapSection {
    #[serde(rename = "b1_range_mG_per_cm")]
    pub b1_range: SweepRange,
    #[serde(rename = "b2_range_mG_per_cm2")]
    pub b2_range: SweepRange,
}

impl Default for HeatmapSection {
    fn default() -> Self {
        HeatmapSection {
            b1_range: SweepRange {
                min: -10.0,
                max: 10.0,
                points: 41,
            },
            b2_range: SweepRange {
                min: -10.0,
                max: 10.0,
                points: 41,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CycleCompensation {
    None,
    Schedule,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(rename = "delta_b_mG")]
    pub delta_b: f64,
    pub n_levels: usize,
    pub n_cycles: usize,
    pub compensation: CycleCompensation,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            delta_b: 6.8,
            n_levels: 13,
            n_cycles: 500,
            compensation: CycleCompensation::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CompensateMode {
    Bias,
    Profile,
    Complete,
    Optimize,
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompensateSection {
    pub mode: CompensateMode,
    #[serde(rename = "intensity_cap_mW_mm2")]
    pub intensity_cap: f64,
    pub budget: usize,
    pub n_levels: usize,
}

impl Default for CompensateSection {
    fn default() -> Self {
        CompensateSection {
            mode: CompensateMode::Complete,
            intensity_cap: DEFAULT_INTENSITY_CAP,
            budget: 200,
            n_levels: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlmSection {
    pub samples: usize,
    pub pitch_mm: f64,
    pub period_samples: usize,
    pub waist_mm: f64,
    pub support_mm: [f64; 2],
    /// Target as a fraction of the peak incident intensity:
    /// level (1 + slope u + curvature u²), u = z′/half-width of the support.
    pub target_level: f64,
    pub target_slope: f64,
    pub target_curvature: f64,
    /// CSV with columns z_prime_mm, intensity; overrides the polynomial.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_csv: Option<PathBuf>,
    pub iterations: usize,
    pub tolerance: f64,
    pub pgm_rows: usize,
}

impl Default for SlmSection {
    fn default() -> Self {
        SlmSection {
            samples: 1920,
            pitch_mm: 0.008,
            period_samples: 16,
            waist_mm: DEFAULT_WAIST_MM,
            support_mm: [DEFAULT_SUPPORT_MM.0, DEFAULT_SUPPORT_MM.1],
            target_level: 0.12,
            target_slope: 0.6,
            target_curvature: 0.0,
            target_csv: None,
            iterations: 30,
            tolerance: 0.01,
            pgm_rows: 1080,
        }
    }
}

/// `MIN:MAX:N` on the command line, `{ min, max, points }` in the file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, n] = parts.as_slice() else {
            return Err(format!("expected MIN:MAX:N, got '{s}'"));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{v}' is not a number"))
        };
        let (min, max) = (num(min)?, num(max)?);
        let points = n
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("'{n}' is not a point count"))?;
        if !min.is_finite() || !max.is_finite() || points == 0 {
            return Err(format!(
                "range '{s}' must be finite with at least one point"
            ));
        }
        Ok(SweepRange { min, max, points })
    }
}

impl ScenarioConfig {
    pub fn load(path: Option<&Path>) -> ConfigResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut cfg: ScenarioConfig =
            toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.field.residual_csv,
            &mut cfg.field.series_csv,
            &mut cfg.slm.target_csv,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn atom(&self) -> ConfigResult<AtomSystem> {
        match self.atom.species.as_str() {
            "rb85" => Ok(load_rb85()),
            other => Err(ConfigError(format!(
                "atom.species: unknown species '{other}' (available: rb85)"
            ))),
        }
    }

    pub fn beam(&self) -> ConfigResult<BeamConfig> {
        let b = &self.beam;
        let intensity = if b.intensity_c1 == 0.0 && b.intensity_c2 == 0.0 {
            IntensityProfile::Uniform(b.intensity)
        } else {
            IntensityProfile::Polynomial([b.intensity, b.intensity_c1, b.intensity_c2])
        };
        let mut beam = BeamConfig::new(b.detuning_ghz, 0.0)
            .with_intensity(intensity)
            .with_polarization(b.polarization_q)
            .with_angle_deg(b.angle_deg);
        beam.zeta_dot_b_sq = b.zeta_dot_b_sq;
        beam.field_scale = b.field_scale;
        beam.validate()
            .map_err(|e| ConfigError(format!("beam: {e}")))?;
        Ok(beam)
    }

    pub fn field(&self) -> ConfigResult<FieldProfile> {
        let f = &self.field;
        let profile = FieldProfile::polynomial(f.b0, f.b1, f.b2);
        match &f.residual_csv {
            None => Ok(profile),
            Some(path) => {
                let samples = read_csv_pairs(path, "z_cm", "b_mG")?;
                profile
                    .with_residual(samples)
                    .map_err(|e| ConfigError(format!("field.residual_csv: {e}")))
            }
        }
    }

    /// Per-cycle bias values from `field.series_csv`, if configured.
    pub fn series(&self) -> ConfigResult<Option<Vec<f64>>> {
        let Some(path) = &self.field.series_csv else {
            return Ok(None);
        };
        let file = std::fs::File::open(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let rows = starkmem::export::read_columns(file, &["b0_mG"])
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Ok(Some(rows.into_iter().map(|r| r[0]).collect()))
    }

    pub fn ensemble(&self, atom: &AtomSystem) -> ConfigResult<EnsembleConfig> {
        let e = &self.ensemble;
        let envelope = match e.envelope {
            EnvelopeName::Gaussian => Envelope::Gaussian {
                t_us: e.envelope_t_us,
            },
            EnvelopeName::Exponential => Envelope::Exponential {
                rate_per_us: e.envelope_rate_per_us,
            },
            EnvelopeName::None => Envelope::None,
        };
        let scheme = match e.scheme {
            SchemeName::Eit => Scheme::Eit {
                q_storage: e.q_storage,
            },
            SchemeName::Raman => Scheme::Raman {
                m_f: e.m_f,
                m_f_prime: e.m_f_prime,
            },
        };
        let n = 2 * atom.storage_pair().0.f as usize + 1;
        let populations = e
            .populations
            .clone()
            .unwrap_or_else(|| vec![1.0 / n as f64; n]);
        let ensemble = EnsembleConfig {
            center_cm: e.center_cm,
            sigma_cm: e.sigma_cm,
            populations,
            scheme,
            envelope,
        };
        ensemble
            .validate(atom)
            .map_err(|err| ConfigError(format!("ensemble: {err}")))?;
        Ok(ensemble)
    }

    pub fn time_grid(&self) -> ConfigResult<Vec<f64>> {
        if !(self.run.t_max_us > 0.0) || self.run.t_points < 2 {
            return Err(ConfigError(
                "run: t_max_us must be positive and t_points at least 2".into(),
            ));
        }
        Ok(starkmem::memory::time_grid(
            self.run.t_max_us,
            self.run.t_points,
        ))
    }

    pub fn search(&self) -> LifetimeSearch {
        LifetimeSearch {
            t_max: self.run.t_max_us,
            ..LifetimeSearch::default()
        }
    }
}

pub fn read_csv_pairs(path: &Path, x: &str, y: &str) -> ConfigResult<Vec<(f64, f64)>> {
    let file =
        std::fs::File::open(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    read_pairs(file, x, y).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}
