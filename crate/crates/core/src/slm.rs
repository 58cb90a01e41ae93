//! Zero-order intensity shaping with a sinusoidal phase grating
//! `φ(z′) = m(z′) sin(2π z′/T)` on a 1-D spatial light modulator.
//!
//! The far field keeps only a window of half the order spacing around the
//! zero order; the transmitted zero-order intensity is ≈ J₀(m)² times the
//! incident intensity.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First zero of J₀; J₀² decreases monotonically on [0, this].
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// Default incident 1/e² intensity radius, small enough that the beam has
/// no weight at the device edges.
pub const DEFAULT_WAIST_MM: f64 = 1.5;

/// Default region (mm) over which targets are matched.
pub const DEFAULT_SUPPORT_MM: (f64, f64) = (-1.2, 1.2);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlmGrid {
    pub samples: usize,
    pub pitch_mm: f64,
}

impl Default for SlmGrid {
    fn default() -> Self {
        SlmGrid {
            samples: 1920,
            pitch_mm: 0.008,
        }
    }
}

impl SlmGrid {
    /// Pixel-center coordinate, mm, centered on the device.
    pub fn z(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (self.samples as f64 - 1.0)) * self.pitch_mm
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.z(i)).collect()
    }

    pub fn extent_mm(&self) -> f64 {
        self.samples as f64 * self.pitch_mm
    }

    /// Gaussian intensity `peak exp(−2z²/w²)`.
    pub fn gaussian(&self, waist_mm: f64, peak: f64) -> Vec<f64> {
        (0..self.samples)
            .map(|i| peak * (-2.0 * (self.z(i) / waist_mm).powi(2)).exp())
            .collect()
    }

    /// Evaluates `f(z′)` on the grid.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.samples).map(|i| f(self.z(i))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMask {
    pub grid: SlmGrid,
    /// Grating period in pixels.
    pub period_samples: usize,
    /// Modulation depth per pixel, radians in [0, π].
    pub m: Vec<f64>,
}

impl PhaseMask {
    pub fn new(grid: SlmGrid, period_samples: usize, m: Vec<f64>) -> Result<Self> {
        if m.len() != grid.samples {
            return Err(Error::GridMismatch {
                mask: m.len(),
                incident: grid.samples,
            });
        }
        if period_samples < 2 || grid.samples % period_samples != 0 {
            return Err(Error::InvalidInput(format!(
                "period {period_samples} must be at least 2 and divide {} samples",
                grid.samples
            )));
        }
        if let Some(bad) = m.iter().find(|v| !(0.0..=PI).contains(*v)) {
            return Err(Error::DomainError(format!(
                "modulation depth {bad} outside [0, π]"
            )));
        }
        Ok(PhaseMask {
            grid,
            period_samples,
            m,
        })
    }

    pub fn uniform(grid: SlmGrid, period_samples: usize, m: f64) -> Result<Self> {
        Self::new(grid, period_samples, vec![m; grid.samples])
    }

    /// Applied phase at pixel `i`.
    pub fn phase(&self, i: usize) -> f64 {
        self.m[i] * (2.0 * PI * (i % self.period_samples) as f64 / self.period_samples as f64).sin()
    }

    /// Phase wrapped into [0, 2π).
    pub fn wrapped_phase(&self) -> Vec<f64> {
        (0..self.m.len())
            .map(|i| self.phase(i).rem_euclid(2.0 * PI))
            .collect()
    }
}

/// J₀(m)², the zero-order fraction of a sinusoidal phase grating.
pub fn zero_order_efficiency(m: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&m) {
        return Err(Error::DomainError(format!(
            "modulation depth {m} outside [0, π]"
        )));
    }
    Ok(libm::j0(m).powi(2))
}

/// Smallest m with J₀(m)² = `efficiency`.
pub fn inverse_zero_order_efficiency(efficiency: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::DomainError(format!(
            "efficiency {efficiency} outside [0, 1]"
        )));
    }
    if efficiency == 1.0 {
        return Ok(0.0);
    }
    if efficiency == 0.0 {
        return Ok(J0_FIRST_ZERO);
    }
    let (mut lo, mut hi) = (0.0, J0_FIRST_ZERO);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if libm::j0(mid).powi(2) > efficiency {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Source of zero-order intensity for a mask: the simulator here, or a
/// camera on real hardware.
pub trait ZeroOrderMeasurement {
    fn measure(&mut self, mask: &PhaseMask) -> Result<Vec<f64>>;
}

impl<F: FnMut(&PhaseMask) -> Result<Vec<f64>>> ZeroOrderMeasurement for F {
    fn measure(&mut self, mask: &PhaseMask) -> Result<Vec<f64>> {
        self(mask)
    }
}

/// Scalar-diffraction zero-order filter for a fixed incident beam.
pub struct FarfieldSimulator {
    amplitude: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FarfieldSimulator {
    pub fn new(incident: &[f64]) -> Result<Self> {
        if incident.iter().any(|&i| !(i >= 0.0)) {
            return Err(Error::InvalidInput(
                "incident intensity must be non-negative".into(),
            ));
        }
        let mut planner = FftPlanner::new();
        Ok(FarfieldSimulator {
            amplitude: incident.iter().map(|i| i.sqrt()).collect(),
            forward: planner.plan_fft_forward(incident.len()),
            inverse: planner.plan_fft_inverse(incident.len()),
        })
    }

    pub fn simulate(&self, mask: &PhaseMask) -> Result<Vec<f64>> {
        let n = self.amplitude.len();
        if mask.m.len() != n {
            return Err(Error::GridMismatch {
                mask: mask.m.len(),
                incident: n,
            });
        }
        let mut field: Vec<Complex64> = self
            .amplitude
            .iter()
            .enumerate()
            .map(|(i, &a)| Complex64::from_polar(a, mask.phase(i)))
            .collect();
        self.forward.process(&mut field);
        // orders sit every n/T bins
        let half_spacing = n / mask.period_samples / 2;
        for (j, c) in field.iter_mut().enumerate() {
            let k = if j <= n / 2 { j } else { n - j };
            if k >= half_spacing {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse.process(&mut field);
        let norm = 1.0 / (n as f64 * n as f64);
        Ok(field.iter().map(|c| c.norm_sqr() * norm).collect())
    }
}

impl ZeroOrderMeasurement for FarfieldSimulator {
    fn measure(&mut self, mask: &PhaseMask) -> Result<Vec<f64>> {
        self.simulate(mask)
    }
}

/// Zero-order intensity behind `mask` for `incident` intensity.
pub fn simulate_farfield(mask: &PhaseMask, incident: &[f64]) -> Result<Vec<f64>> {
    if mask.m.len() != incident.len() {
        return Err(Error::GridMismatch {
            mask: mask.m.len(),
            incident: incident.len(),
        });
    }
    FarfieldSimulator::new(incident)?.simulate(mask)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub period_samples: usize,
    pub iterations: usize,
    /// Stop once the relative RMS error falls below this.
    pub tolerance: f64,
    /// Exponent applied to the measured/target correction ratio.
    pub damping: f64,
    /// Pixel range `[start, end)` the target must be met on.
    pub support: (usize, usize),
}

impl SynthesisOptions {
    pub fn new(grid: &SlmGrid, support_mm: (f64, f64)) -> Self {
        let start = (0..grid.samples)
            .find(|&i| grid.z(i) >= support_mm.0)
            .unwrap_or(grid.samples);
        let end = (0..grid.samples)
            .rev()
            .find(|&i| grid.z(i) <= support_mm.1)
            .map_or(start, |i| i + 1);
        SynthesisOptions {
            period_samples: 16,
            iterations: 30,
            tolerance: 0.01,
            damping: 1.0,
            support: (start, end.max(start)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthesis {
    pub mask: PhaseMask,
    pub rms_error: f64,
    /// Best relative RMS error after the initial guess and each correction.
    pub error_trace: Vec<f64>,
}

/// sqrt(Σ(out − target)² / Σ target²) over the support.
pub fn relative_rms_error(output: &[f64], target: &[f64], support: (usize, usize)) -> f64 {
    let (num, den) = (support.0..support.1).fold((0.0, 0.0), |(n, d), i| {
        (n + (output[i] - target[i]).powi(2), d + target[i].powi(2))
    });
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Mask whose zero order reproduces `target` on the support, starting from
/// the J₀² inversion and correcting against `measurement`. Outside the
/// support the edge efficiencies are held.
pub fn synthesize_mask_with(
    target: &[f64],
    incident: &[f64],
    grid: SlmGrid,
    opts: &SynthesisOptions,
    measurement: &mut dyn ZeroOrderMeasurement,
) -> Result<Synthesis> {
    let n = grid.samples;
    if target.len() != n || incident.len() != n {
        return Err(Error::GridMismatch {
            mask: target.len(),
            incident: incident.len(),
        });
    }
    let (s0, s1) = opts.support;
    if s0 >= s1 || s1 > n {
        return Err(Error::InvalidInput(format!(
            "empty or out-of-range support {s0}..{s1}"
        )));
    }
    let mut wanted = vec![0.0; n];
    for i in s0..s1 {
        if target[i] < 0.0 || target[i] > incident[i] * (1.0 + 1e-12) {
            return Err(Error::TargetInfeasible { z_prime: grid.z(i) });
        }
        wanted[i] = if incident[i] > 0.0 {
            (target[i] / incident[i]).min(1.0)
        } else {
            1.0
        };
    }
    for i in 0..s0 {
        wanted[i] = wanted[s0];
    }
    for i in s1..n {
        wanted[i] = wanted[s1 - 1];
    }
    let depth = |eff: &[f64]| {
        eff.iter()
            .map(|&e| inverse_zero_order_efficiency(e.clamp(0.0, 1.0)))
            .collect::<Result<Vec<f64>>>()
    };

    let mut efficiency = wanted.clone();
    let mut best = PhaseMask::new(grid, opts.period_samples, depth(&efficiency)?)?;
    let mut best_out = measurement.measure(&best)?;
    let mut best_err = relative_rms_error(&best_out, target, opts.support);
    let mut trace = vec![best_err];
    let mut damping = opts.damping;
    for _ in 0..opts.iterations {
        if best_err < opts.tolerance {
            break;
        }
        let candidate_eff: Vec<f64> = (0..n)
            .map(|i| {
                let measured = if incident[i] > 0.0 {
                    best_out[i] / incident[i]
                } else {
                    0.0
                };
                if measured > 0.0 && wanted[i] > 0.0 {
                    (efficiency[i] * (wanted[i] / measured).powf(damping)).clamp(0.0, 1.0)
                } else {
                    wanted[i]
                }
            })
            .collect();
        let candidate = PhaseMask::new(grid, opts.period_samples, depth(&candidate_eff)?)?;
        let out = measurement.measure(&candidate)?;
        let err = relative_rms_error(&out, target, opts.support);
        if err < best_err {
            best = candidate;
            best_out = out;
            best_err = err;
            efficiency = candidate_eff;
        } else {
            damping *= 0.5;
        }
        trace.push(best_err);
    }
    Ok(Synthesis {
        mask: best,
        rms_error: best_err,
        error_trace: trace,
    })
}

/// [`synthesize_mask_with`] using the simulated far field as feedback.
pub fn synthesize_mask(
    target: &[f64],
    incident: &[f64],
    grid: SlmGrid,
    opts: &SynthesisOptions,
) -> Result<Synthesis> {
    if incident.len() != grid.samples {
        return Err(Error::GridMismatch {
            mask: grid.samples,
            incident: incident.len(),
        });
    }
    let mut sim = FarfieldSimulator::new(incident)?;
    synthesize_mask_with(target, incident, grid, opts, &mut sim)
}
