//! Spin-wave retrieval efficiency under magnetic (real or fictitious)
//! fields, decay curves and 1/e lifetimes.
//!
//! The stored coherence between |F=2, m_F⟩ and |F=3, m_F'⟩ picks up the
//! phase `μ_B g_FF' B(z) t / ħ`. Retrieval efficiency is the squared
//! overlap of the dephased spin wave with the initial one, averaged over the
//! Gaussian atomic density along z, times a field-independent envelope.

mod heatmap;
mod montecarlo;

pub use heatmap::{lifetime_heatmap, Heatmap};
pub use montecarlo::{
    average_curve, average_decay, bias_levels, draw_bias_offsets, montecarlo_lifetime,
    MonteCarloConfig,
};

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atomic::AtomSystem;
use crate::error::{Error, Result};
use crate::field::{FieldProfile, FitSupport};
use crate::quadrature::{integrate, QuadratureOptions};

/// Spatial integrals run over center ± this many σ. The Gaussian mass left
/// outside is below 1e-22.
pub const INTEGRATION_HALF_WIDTH_SIGMAS: f64 = 10.0;

/// Field-independent decoherence envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    None,
    /// exp(−t²/T²)
    Gaussian {
        t_us: f64,
    },
    /// exp(−Γt)
    Exponential {
        rate_per_us: f64,
    },
}

impl Envelope {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Envelope::None => 1.0,
            Envelope::Gaussian { t_us } => (-(t / t_us).powi(2)).exp(),
            Envelope::Exponential { rate_per_us } => (-rate_per_us * t).exp(),
        }
    }

    /// Characteristic decay time, infinite when there is no decay.
    pub fn time_scale(&self) -> f64 {
        match *self {
            Envelope::None => f64::INFINITY,
            Envelope::Gaussian { t_us } => t_us,
            Envelope::Exponential { rate_per_us } if rate_per_us > 0.0 => 1.0 / rate_per_us,
            Envelope::Exponential { .. } => f64::INFINITY,
        }
    }

    /// 1/e time of the envelope alone.
    pub fn lifetime(&self) -> Option<f64> {
        match *self {
            Envelope::None => None,
            Envelope::Gaussian { t_us } => Some(t_us),
            Envelope::Exponential { rate_per_us } if rate_per_us > 0.0 => Some(1.0 / rate_per_us),
            Envelope::Exponential { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Envelope::Gaussian { t_us } if !(t_us > 0.0) => Err(Error::InvalidInput(format!(
                "Gaussian envelope T = {t_us} must be positive"
            ))),
            Envelope::Exponential { rate_per_us } if !(rate_per_us >= 0.0) => {
                Err(Error::InvalidInput(format!(
                    "exponential rate {rate_per_us} must be non-negative"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Storage scheme: which (m_F, m_F') pairs hold the spin wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// All populated m_F of the lower manifold, paired with m_F' = m_F + q.
    Eit { q_storage: i32 },
    /// A single (m_F, m_F') pair.
    Raman { m_f: i32, m_f_prime: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Density center, cm.
    pub center_cm: f64,
    /// rms length of the density, cm.
    pub sigma_cm: f64,
    /// Weights a_{m_F} for m_F = −F..F of the lower storage manifold.
    pub populations: Vec<f64>,
    pub scheme: Scheme,
    pub envelope: Envelope,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            center_cm: 0.0,
            sigma_cm: 0.625,
            populations: vec![0.2; 5],
            scheme: Scheme::Eit { q_storage: 1 },
            envelope: Envelope::Gaussian { t_us: 100.0 },
        }
    }
}

impl EnsembleConfig {
    /// Single-pair Raman storage on |2, m⟩ ↔ |3, m⟩.
    pub fn raman(m_f: i32, envelope: Envelope) -> Self {
        EnsembleConfig {
            scheme: Scheme::Raman {
                m_f,
                m_f_prime: m_f,
            },
            envelope,
            ..Self::default()
        }
    }

    pub fn eit(q_storage: i32, envelope: Envelope) -> Self {
        EnsembleConfig {
            scheme: Scheme::Eit { q_storage },
            envelope,
            ..Self::default()
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        let u = (z - self.center_cm) / self.sigma_cm;
        (-0.5 * u * u).exp() / (self.sigma_cm * (2.0 * PI).sqrt())
    }

    pub fn integration_bounds(&self) -> (f64, f64) {
        let w = INTEGRATION_HALF_WIDTH_SIGMAS * self.sigma_cm;
        (self.center_cm - w, self.center_cm + w)
    }

    /// Density-weighted ±2σ support for reducing sampled fields.
    pub fn fit_support(&self) -> FitSupport {
        FitSupport::around(self.center_cm, self.sigma_cm)
    }

    pub fn validate(&self, atom: &AtomSystem) -> Result<()> {
        if !(self.sigma_cm > 0.0) || !self.center_cm.is_finite() {
            return Err(Error::InvalidInput(format!(
                "density width {} cm must be positive",
                self.sigma_cm
            )));
        }
        self.envelope.validate()?;
        let (low, high) = atom.storage_pair();
        match self.scheme {
            Scheme::Eit { q_storage } => {
                if q_storage.abs() > 1 {
                    return Err(Error::InvalidInput(format!(
                        "q_storage = {q_storage} must be -1, 0 or 1"
                    )));
                }
                if self.populations.len() != 2 * low.f as usize + 1 {
                    return Err(Error::InvalidInput(format!(
                        "expected {} populations for F={}, got {}",
                        2 * low.f + 1,
                        low.f,
                        self.populations.len()
                    )));
                }
                if self.populations.iter().any(|&a| !(a >= 0.0)) {
                    return Err(Error::InvalidInput(
                        "populations must be non-negative".into(),
                    ));
                }
                let total: f64 = self.populations.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "populations sum to {total}, expected 1"
                    )));
                }
            }
            Scheme::Raman { m_f, m_f_prime } => {
                if !low.contains(m_f) || !high.contains(m_f_prime) {
                    return Err(Error::InvalidInput(format!(
                        "Raman pair ({m_f}, {m_f_prime}) outside the manifolds"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Sampled efficiency curve with its 1/e lifetime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    /// (t in µs, η).
    pub samples: Vec<(f64, f64)>,
    pub lifetime_1e: f64,
}

impl DecayCurve {
    /// Builds the curve and locates the first drop to 1/e, interpolating
    /// linearly between grid points.
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self> {
        let threshold = 1.0 / E;
        let t_max = samples.last().map_or(0.0, |s| s.0);
        let idx = samples
            .iter()
            .position(|&(_, eta)| eta <= threshold)
            .ok_or(Error::LifetimeNotReached { t_max })?;
        let lifetime_1e = if idx == 0 {
            samples[0].0
        } else {
            let (t0, e0) = samples[idx - 1];
            let (t1, e1) = samples[idx];
            t0 + (t1 - t0) * (e0 - threshold) / (e0 - e1)
        };
        Ok(DecayCurve {
            samples,
            lifetime_1e,
        })
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }
}

/// Uniform time grid 0, dt, ..., t_max with `n` points.
pub fn time_grid(t_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.first() != Some(&0.0) {
        return Err(Error::InvalidInput("time grid must start at t = 0".into()));
    }
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Controls the continuous lifetime search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeSearch {
    pub t_max: f64,
    /// Scan step; chosen from the envelope and field strength when `None`.
    pub step: Option<f64>,
    pub max_steps: usize,
}

impl Default for LifetimeSearch {
    fn default() -> Self {
        LifetimeSearch {
            t_max: 5_000.0,
            step: None,
            max_steps: 20_000,
        }
    }
}

/// Evaluates retrieval efficiency for one ensemble.
#[derive(Debug, Clone)]
pub struct MemorySimulator {
    ensemble: EnsembleConfig,
    /// (a_{m_F}, g_FF') for each populated pair.
    pairs: Vec<(f64, f64)>,
    /// μ_B/ħ, rad/µs per mG.
    bohr_rate: f64,
    quad: QuadratureOptions,
    /// ∫ a(z) dz over the integration window.
    mass: f64,
}

impl MemorySimulator {
    pub fn new(atom: &AtomSystem, ensemble: EnsembleConfig) -> Result<Self> {
        Self::with_quadrature(atom, ensemble, QuadratureOptions::default())
    }

    pub fn with_quadrature(
        atom: &AtomSystem,
        ensemble: EnsembleConfig,
        quad: QuadratureOptions,
    ) -> Result<Self> {
        ensemble.validate(atom)?;
        let (low, _) = atom.storage_pair();
        let pairs = match ensemble.scheme {
            Scheme::Eit { q_storage } => low
                .sublevels()
                .zip(&ensemble.populations)
                .filter(|(_, &a)| a > 0.0)
                .map(|(m, &a)| (a, atom.differential_g(m, m + q_storage)))
                .collect(),
            Scheme::Raman { m_f, m_f_prime } => vec![(1.0, atom.differential_g(m_f, m_f_prime))],
        };
        let (lo, hi) = ensemble.integration_bounds();
        let mass = integrate(|z| Complex64::new(ensemble.density(z), 0.0), lo, hi, &quad).re;
        Ok(MemorySimulator {
            ensemble,
            pairs,
            bohr_rate: atom.constants.bohr_rate_per_mg(),
            quad,
            mass,
        })
    }

    pub fn ensemble(&self) -> &EnsembleConfig {
        &self.ensemble
    }

    pub fn quadrature(&self) -> &QuadratureOptions {
        &self.quad
    }

    /// (a_{m_F}, g_FF') of every pair that carries population.
    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn bohr_rate(&self) -> f64 {
        self.bohr_rate
    }

    /// Retrieval efficiency, dispatching on the storage scheme.
    pub fn efficiency(&self, field: &FieldProfile, t: f64) -> f64 {
        self.dephasing(field, t) * self.ensemble.envelope.eval(t)
    }

    /// Field-only factor of the efficiency (the envelope stripped off).
    pub fn dephasing(&self, field: &FieldProfile, t: f64) -> f64 {
        match self.ensemble.scheme {
            Scheme::Eit { .. } => self.multi_overlap(field, t),
            Scheme::Raman { .. } => self.raman_overlap(field, t),
        }
    }

    /// Multi-sublevel efficiency:
    /// |Σ a_m ∫ a(z) exp[i μ_B g_m B(z) t/ħ] dz|² / |…|²_{t=0} × envelope.
    pub fn efficiency_multi(&self, field: &FieldProfile, t: f64) -> f64 {
        self.multi_overlap(field, t) * self.ensemble.envelope.eval(t)
    }

    /// Single-pair efficiency with the bias removed (it is a global phase):
    /// |∫ a(z) exp[−i μ_B g (B(z) − B0) t/ħ] dz|² × envelope.
    pub fn efficiency_raman(&self, field: &FieldProfile, t: f64) -> f64 {
        self.raman_overlap(field, t) * self.ensemble.envelope.eval(t)
    }

    fn multi_overlap(&self, field: &FieldProfile, t: f64) -> f64 {
        if field.is_uniform() {
            let phase = self.bohr_rate * field.b0 * t;
            let amp: Complex64 = self
                .pairs
                .iter()
                .map(|&(a, g)| Complex64::from_polar(a, g * phase))
                .sum();
            let norm: f64 = self.pairs.iter().map(|&(a, _)| a).sum();
            return amp.norm_sqr() / (norm * norm);
        }
        let (lo, hi) = self.ensemble.integration_bounds();
        let amplitude = integrate(
            |z| {
                let phase = self.bohr_rate * field.eval(z) * t;
                let rho = self.ensemble.density(z);
                self.pairs
                    .iter()
                    .map(|&(a, g)| Complex64::from_polar(rho * a, g * phase))
                    .sum()
            },
            lo,
            hi,
            &self.quad,
        );
        let norm = self.mass * self.pairs.iter().map(|&(a, _)| a).sum::<f64>();
        amplitude.norm_sqr() / (norm * norm)
    }

    fn raman_overlap(&self, field: &FieldProfile, t: f64) -> f64 {
        if field.is_uniform() {
            return 1.0;
        }
        let g: f64 = self.pairs.iter().map(|&(a, g)| a * g).sum::<f64>()
            / self.pairs.iter().map(|p| p.0).sum::<f64>();
        let (lo, hi) = self.ensemble.integration_bounds();
        let amplitude = integrate(
            |z| {
                let phase = -self.bohr_rate * g * (field.eval(z) - field.b0) * t;
                Complex64::from_polar(self.ensemble.density(z), phase)
            },
            lo,
            hi,
            &self.quad,
        );
        amplitude.norm_sqr() / (self.mass * self.mass)
    }

    /// η sampled on `t_grid` (which must start at 0 and increase).
    pub fn sample_curve(&self, field: &FieldProfile, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        check_grid(t_grid)?;
        Ok(t_grid
            .iter()
            .map(|&t| (t, self.efficiency(field, t)))
            .collect())
    }

    pub fn decay_curve(&self, field: &FieldProfile, t_grid: &[f64]) -> Result<DecayCurve> {
        DecayCurve::from_samples(self.sample_curve(field, t_grid)?)
    }

    fn auto_step(&self, field: &FieldProfile, search: &LifetimeSearch) -> f64 {
        let span = 4.0 * self.ensemble.sigma_cm;
        let c = self.ensemble.center_cm;
        let spread = match self.ensemble.scheme {
            Scheme::Eit { .. } => field.max_abs_on(c - span, c + span),
            Scheme::Raman { .. } => FieldProfile {
                b0: 0.0,
                ..field.clone()
            }
            .max_abs_on(c - span, c + span),
        };
        let g_max = self.pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let rate = self.bohr_rate * g_max * spread;
        let phase_time = if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        };
        let step = (self.ensemble.envelope.time_scale() / 32.0).min(phase_time / 4.0);
        let step = if step.is_finite() {
            step
        } else {
            search.t_max / 256.0
        };
        step.max(search.t_max / search.max_steps as f64)
    }

    /// Illinois regula falsi on η − threshold, bracketed by lo (above) and hi (at or below).
    fn refine(&self, field: &FieldProfile, mut lo: f64, mut hi: f64, threshold: f64) -> f64 {
        let mut f_lo = self.efficiency(field, lo) - threshold;
        let mut f_hi = self.efficiency(field, hi) - threshold;
        let mut side = 0i8;
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi || f_hi == 0.0 {
                break;
            }
            let secant = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            let mid = 0.5 * (lo + hi);
            // fall back to bisection whenever the secant leaves the bracket interior
            let t = if secant > lo && secant < hi {
                secant
            } else {
                mid
            };
            let f = self.efficiency(field, t) - threshold;
            if f <= 0.0 {
                hi = t;
                f_hi = f;
                if side == -1 {
                    f_lo *= 0.5;
                }
                side = -1;
            } else {
                lo = t;
                f_lo = f;
                if side == 1 {
                    f_hi *= 0.5;
                }
                side = 1;
            }
        }
        hi
    }

    /// First time η reaches 1/e, found by scanning then refining the bracket.
    pub fn lifetime(&self, field: &FieldProfile, search: &LifetimeSearch) -> Result<f64> {
        let threshold = 1.0 / E;
        let step = search.step.unwrap_or_else(|| self.auto_step(field, search));
        let mut prev = 0.0;
        let mut k = 1usize;
        loop {
            let t = (k as f64 * step).min(search.t_max);
            if self.efficiency(field, t) <= threshold {
                return Ok(self.refine(field, prev, t, threshold));
            }
            if t >= search.t_max {
                return Err(Error::LifetimeNotReached {
                    t_max: search.t_max,
                });
            }
            prev = t;
            k += 1;
        }
    }
}
