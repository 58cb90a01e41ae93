//! Compensation-beam synthesis: uniform bias cancellation, spatially shaped
//! intensity for gradients and curvature, lifetime optimization and
//! per-cycle (temporal) schedules.
//!
//! The fictitious field of the vector term is `κ q I(z)` with κ the field per
//! unit intensity of a σ+ beam, so every inversion here is linear.

use serde::{Deserialize, Serialize};

use crate::atomic::AtomSystem;
use crate::error::{Error, Result};
use crate::field::{compose, FieldProfile, FieldTimeSeries};
use crate::memory::{EnsembleConfig, LifetimeSearch, MemorySimulator};
use crate::optimize::{minimize, SearchOptions};
use crate::stark::{field_per_intensity, BeamConfig, IntensityProfile};

/// Fields below this magnitude (mG) are treated as already compensated.
pub const IDEMPOTENCE_THRESHOLD_MG: f64 = 1e-6;

pub const DEFAULT_INTENSITY_CAP: f64 = 50.0;

/// Compensation intensity `c0 + c1 z + c2 z²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityCoefficients {
    #[serde(rename = "c0_mW_mm2")]
    pub c0: f64,
    #[serde(rename = "c1_mW_mm2_per_cm")]
    pub c1: f64,
    #[serde(rename = "c2_mW_mm2_per_cm2")]
    pub c2: f64,
}

impl IntensityCoefficients {
    pub fn at(&self, z: f64) -> f64 {
        self.c0 + z * (self.c1 + z * self.c2)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.c0, self.c1, self.c2]
    }

    pub fn is_zero(&self) -> bool {
        self.c0 == 0.0 && self.c1 == 0.0 && self.c2 == 0.0
    }

    /// (min, max) over `[lo, hi]`.
    pub fn range_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut vals = vec![self.at(lo), self.at(hi)];
        if self.c2 != 0.0 {
            let v = -self.c1 / (2.0 * self.c2);
            if v > lo && v < hi {
                vals.push(self.at(v));
            }
        }
        vals.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            })
    }
}

/// Per-cycle entry of a temporal schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub cycle: usize,
    #[serde(rename = "intensity_mW_mm2")]
    pub intensity: f64,
    pub q: f64,
    /// Bias left over in this cycle, mG.
    #[serde(rename = "residual_mG")]
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensationPlan {
    /// Template beam with the chosen polarization and intensity profile.
    pub beam: BeamConfig,
    pub intensity: IntensityCoefficients,
    pub support_cm: [f64; 2],
    /// Field per unit intensity for q = +1, mG per mW/mm².
    #[serde(rename = "field_per_intensity_mG")]
    pub field_per_intensity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_schedule: Option<Vec<ScheduleEntry>>,
    #[serde(
        rename = "quantization_half_step_mG",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub quantization_half_step: Option<f64>,
    #[serde(rename = "predicted_lifetime_us")]
    pub predicted_lifetime: Option<f64>,
    pub residual_after: FieldProfile,
    /// Best-so-far lifetime after each optimizer evaluation.
    #[serde(
        rename = "lifetime_trace_us",
        default,
        skip_serializing_if = "Vec::is_empty"
    )]
    pub lifetime_trace: Vec<f64>,
}

impl CompensationPlan {
    pub fn polarization(&self) -> f64 {
        self.beam.polarization
    }

    /// Fictitious field produced by the plan's static beam.
    pub fn fictitious_field(&self) -> FieldProfile {
        let s = self.field_per_intensity * self.beam.polarization;
        FieldProfile::polynomial(
            s * self.intensity.c0,
            s * self.intensity.c1,
            s * self.intensity.c2,
        )
    }

    /// Smallest intensity on `points` evenly spaced support points.
    pub fn min_intensity_on_support(&self, points: usize) -> f64 {
        let [lo, hi] = self.support_cm;
        let n = points.max(2);
        (0..n)
            .map(|i| {
                self.intensity
                    .at(lo + (hi - lo) * i as f64 / (n - 1) as f64)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Fills `predicted_lifetime` from the residual field.
    pub fn predict(mut self, sim: &MemorySimulator, search: &LifetimeSearch) -> Self {
        self.predicted_lifetime = sim.lifetime(&self.residual_after, search).ok();
        self
    }
}

/// Static shaped beam followed by an optional uniform bias beam that
/// removes the b0 the shaped beam could not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedPlan {
    pub profile: CompensationPlan,
    pub bias: Option<CompensationPlan>,
    pub residual_after: FieldProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSettings {
    /// Lifetime evaluations, at least 50.
    pub budget: usize,
    pub seed: u64,
    pub search: LifetimeSearch,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        OptimizeSettings {
            budget: 200,
            seed: 0,
            search: LifetimeSearch::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Compensator {
    atom: AtomSystem,
    beam: BeamConfig,
    kappa: f64,
    intensity_cap: f64,
    support: [f64; 2],
}

impl Compensator {
    /// Uses `beam`'s detuning, geometry and calibration; polarization and
    /// intensity are chosen by the solvers. Default support ±1.25 cm.
    pub fn new(atom: &AtomSystem, beam: &BeamConfig) -> Result<Self> {
        beam.validate()?;
        let template = beam
            .clone()
            .with_polarization(1.0)
            .with_intensity(IntensityProfile::Uniform(0.0));
        let kappa = field_per_intensity(atom, &template)?;
        if kappa == 0.0 || !kappa.is_finite() {
            return Err(Error::InvalidInput(
                "beam geometry produces no fictitious field".into(),
            ));
        }
        Ok(Compensator {
            atom: atom.clone(),
            beam: template,
            kappa,
            intensity_cap: DEFAULT_INTENSITY_CAP,
            support: [-1.25, 1.25],
        })
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.intensity_cap = cap;
        self
    }

    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = [lo, hi];
        self
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn intensity_cap(&self) -> f64 {
        self.intensity_cap
    }

    pub fn support(&self) -> [f64; 2] {
        self.support
    }

    pub fn atom(&self) -> &AtomSystem {
        &self.atom
    }

    /// Largest |B| reachable at the cap, mG.
    pub fn max_field(&self) -> f64 {
        self.kappa.abs() * self.intensity_cap
    }

    fn plan(&self, q: f64, c: IntensityCoefficients, residual: &FieldProfile) -> CompensationPlan {
        let beam = self
            .beam
            .clone()
            .with_polarization(q)
            .with_intensity(IntensityProfile::Polynomial(c.as_array()));
        let mut plan = CompensationPlan {
            beam,
            intensity: c,
            support_cm: self.support,
            field_per_intensity: self.kappa,
            temporal_schedule: None,
            quantization_half_step: None,
            predicted_lifetime: None,
            residual_after: FieldProfile::zero(),
            lifetime_trace: Vec::new(),
        };
        plan.residual_after = compose(residual, &plan.fictitious_field());
        plan
    }

    /// q = ±1 and |I| for a signed target field.
    fn invert(&self, field: f64) -> (f64, f64) {
        let signed = field / self.kappa;
        (if signed < 0.0 { -1.0 } else { 1.0 }, signed.abs())
    }

    /// Uniform beam cancelling `residual_b0`.
    pub fn solve_bias(&self, residual_b0: f64) -> Result<CompensationPlan> {
        if residual_b0.abs() > self.max_field() {
            return Err(Error::FieldOutOfRange {
                requested_mg: residual_b0,
                max_mg: self.max_field(),
            });
        }
        let (q, intensity) = self.invert(-residual_b0);
        let c = IntensityCoefficients {
            c0: intensity,
            c1: 0.0,
            c2: 0.0,
        };
        Ok(self.plan(q, c, &FieldProfile::bias(residual_b0)))
    }

    /// Shaped beam cancelling `residual`'s b1 and b2 (and b0 as far as the
    /// non-negativity and cap constraints allow). A sampled residual part is
    /// passed through to `residual_after` untouched.
    pub fn solve_profile(&self, residual: &FieldProfile) -> Result<CompensationPlan> {
        let [lo, hi] = self.support;
        if residual.max_abs_on(lo, hi) < IDEMPOTENCE_THRESHOLD_MG {
            return Ok(self.plan(1.0, IntensityCoefficients::default(), residual));
        }
        if residual.b1 == 0.0 && residual.b2 == 0.0 {
            let mut plan = self.solve_bias(residual.b0)?;
            plan.residual_after = compose(residual, &plan.fictitious_field());
            return Ok(plan);
        }
        let mut best: Option<(CompensationPlan, (f64, f64, bool))> = None;
        for q in [1.0, -1.0] {
            let s = q * self.kappa;
            let shape = IntensityCoefficients {
                c0: 0.0,
                c1: -residual.b1 / s,
                c2: -residual.b2 / s,
            };
            let (min, max) = shape.range_on(lo, hi);
            let (c0_min, c0_max) = (-min, self.intensity_cap - max);
            if c0_min > c0_max {
                continue;
            }
            let c0 = (-residual.b0 / s).clamp(c0_min, c0_max);
            let c = IntensityCoefficients { c0, ..shape };
            let plan = self.plan(q, c, residual);
            let leading = if c.c2 != 0.0 { c.c2 } else { c.c1 };
            let rank = (
                plan.residual_after.b0.abs(),
                c.range_on(lo, hi).1,
                leading < 0.0,
            );
            if best
                .as_ref()
                .is_none_or(|(_, r)| rank.partial_cmp(r) == Some(std::cmp::Ordering::Less))
            {
                best = Some((plan, rank));
            }
        }
        best.map(|(p, _)| p).ok_or_else(|| {
            Error::NonPhysicalProfile(format!(
                "b1 = {} mG/cm, b2 = {} mG/cm² needs more than {} mW/mm² over [{lo}, {hi}] cm",
                residual.b1, residual.b2, self.intensity_cap
            ))
        })
    }

    /// [`Self::solve_profile`] followed by a uniform beam for the leftover b0.
    pub fn solve_complete(&self, residual: &FieldProfile) -> Result<StagedPlan> {
        let profile = self.solve_profile(residual)?;
        let leftover = profile.residual_after.b0;
        if leftover.abs() < IDEMPOTENCE_THRESHOLD_MG {
            let residual_after = profile.residual_after.clone();
            return Ok(StagedPlan {
                profile,
                bias: None,
                residual_after,
            });
        }
        let bias = self.solve_bias(leftover)?;
        let residual_after = compose(&profile.residual_after, &bias.fictitious_field());
        Ok(StagedPlan {
            profile,
            bias: Some(bias),
            residual_after,
        })
    }

    /// Maximizes the simulated lifetime over (c0, c1, c2, q), seeded from
    /// the analytic profile solution and from no compensation.
    pub fn optimize_lifetime(
        &self,
        ensemble: &EnsembleConfig,
        residual: &FieldProfile,
        settings: &OptimizeSettings,
    ) -> Result<CompensationPlan> {
        if settings.budget < 50 {
            return Err(Error::InvalidInput(format!(
                "optimizer budget {} is below 50",
                settings.budget
            )));
        }
        let sim = MemorySimulator::new(&self.atom, ensemble.clone())?;
        let [lo, hi] = self.support;
        let reach = lo.abs().max(hi.abs()).max(1e-9);
        let cap = self.intensity_cap;
        let lifetime = |x: &[f64]| -> Option<f64> {
            let c = IntensityCoefficients {
                c0: x[0],
                c1: x[1],
                c2: x[2],
            };
            let (min, max) = c.range_on(lo, hi);
            if min < 0.0 || max > cap {
                return None;
            }
            let field = compose(
                residual,
                &self.plan(x[3], c, &FieldProfile::zero()).fictitious_field(),
            );
            Some(match sim.lifetime(&field, &settings.search) {
                Ok(t) => t,
                Err(_) => settings.search.t_max,
            })
        };
        let mut starts = Vec::new();
        if let Ok(p) = self.solve_profile(residual) {
            starts.push(vec![
                p.intensity.c0,
                p.intensity.c1,
                p.intensity.c2,
                p.beam.polarization,
            ]);
        }
        starts.push(vec![0.0, 0.0, 0.0, 1.0]);
        let opts = SearchOptions {
            seed: settings.seed,
            initial_step: Some(vec![
                0.1 * cap,
                0.1 * cap / reach,
                0.1 * cap / (reach * reach),
                0.5,
            ]),
            ..SearchOptions::new(
                vec![0.0, -cap / reach, -cap / (reach * reach), -1.0],
                vec![cap, cap / reach, cap / (reach * reach), 1.0],
                settings.budget,
            )
        };
        let result = minimize(
            |x| lifetime(x).map_or(f64::INFINITY, |t| -t),
            &starts,
            &opts,
        );
        let x = &result.x;
        let c = IntensityCoefficients {
            c0: x[0],
            c1: x[1],
            c2: x[2],
        };
        let mut plan = self.plan(x[3], c, residual);
        plan.predicted_lifetime = Some(-result.value);
        plan.lifetime_trace = result
            .trace
            .iter()
            .map(|v| if v.is_finite() { -v } else { 0.0 })
            .collect();
        Ok(plan)
    }

    /// Per-cycle uniform intensities quantized to `n_levels` equally spaced
    /// signed levels spanning the required field range. Nearest level wins;
    /// ties go to the lower intensity. Only the bias of each cycle is
    /// compensated.
    pub fn schedule_temporal(
        &self,
        series: &FieldTimeSeries,
        n_levels: usize,
    ) -> Result<CompensationPlan> {
        if series.is_empty() || n_levels == 0 {
            return Err(Error::InvalidInput("empty series or zero levels".into()));
        }
        let targets: Vec<f64> = series.bias_values().map(|b| -b).collect();
        let (fmin, fmax) = targets
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        let worst = fmin.abs().max(fmax.abs());
        if worst > self.max_field() {
            return Err(Error::FieldOutOfRange {
                requested_mg: worst,
                max_mg: self.max_field(),
            });
        }
        let levels: Vec<f64> = if n_levels == 1 || fmax == fmin {
            vec![0.5 * (fmin + fmax)]
        } else {
            (0..n_levels)
                .map(|j| fmin + (fmax - fmin) * j as f64 / (n_levels - 1) as f64)
                .collect()
        };
        let half_step = if levels.len() > 1 {
            0.5 * (fmax - fmin) / (n_levels - 1) as f64
        } else {
            0.5 * (fmax - fmin)
        };
        let schedule: Vec<ScheduleEntry> = targets
            .iter()
            .enumerate()
            .map(|(cycle, &target)| {
                let level = levels
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        (a - target)
                            .abs()
                            .total_cmp(&(b - target).abs())
                            .then(a.abs().total_cmp(&b.abs()))
                    })
                    .expect("at least one level");
                let (q, intensity) = self.invert(level);
                ScheduleEntry {
                    cycle,
                    intensity,
                    q,
                    residual: level - target,
                }
            })
            .collect();
        let first = schedule[0];
        let worst_entry = schedule
            .iter()
            .max_by(|a, b| a.residual.abs().total_cmp(&b.residual.abs()))
            .expect("non-empty");
        let c = IntensityCoefficients {
            c0: first.intensity,
            c1: 0.0,
            c2: 0.0,
        };
        let mut plan = self.plan(first.q, c, &FieldProfile::zero());
        plan.residual_after = FieldProfile::bias(worst_entry.residual);
        plan.quantization_half_step = Some(half_step);
        plan.temporal_schedule = Some(schedule);
        Ok(plan)
    }
}

/// Signed compensation field (mG) of each scheduled cycle.
pub fn schedule_fields(plan: &CompensationPlan) -> Vec<f64> {
    plan.temporal_schedule
        .as_deref()
        .unwrap_or_default()
        .iter()
        .map(|e| plan.field_per_intensity * e.q * e.intensity)
        .collect()
}
