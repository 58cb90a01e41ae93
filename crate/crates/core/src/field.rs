//! Magnetic-field profiles along the ensemble axis.
//!
//! A profile is a quadratic `b0 + b1 z + b2 z²` (mG, mG/cm, mG/cm²) plus an
//! optional sampled residual that is linearly interpolated inside its table
//! and zero outside it. Real and fictitious fields share this type.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::atomic::AtomSystem;
use crate::error::{Error, Result};
use crate::stark::{fictitious_field_at, BeamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualPoint {
    pub z_cm: f64,
    #[serde(rename = "b_mG")]
    pub b_mg: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldProfile {
    #[serde(rename = "b0_mG", default)]
    pub b0: f64,
    #[serde(rename = "b1_mG_per_cm", default)]
    pub b1: f64,
    #[serde(rename = "b2_mG_per_cm2", default)]
    pub b2: f64,
    /// Beyond-quadratic part, sorted by z.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual: Vec<ResidualPoint>,
}

impl FieldProfile {
    pub fn polynomial(b0: f64, b1: f64, b2: f64) -> Self {
        FieldProfile {
            b0,
            b1,
            b2,
            residual: Vec::new(),
        }
    }

    pub fn bias(b0: f64) -> Self {
        Self::polynomial(b0, 0.0, 0.0)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Purely sampled profile; samples are sorted by z.
    pub fn sampled(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples
            .iter()
            .any(|(z, b)| !z.is_finite() || !b.is_finite())
        {
            return Err(Error::InvalidInput("non-finite field sample".into()));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput("duplicate z in field samples".into()));
        }
        Ok(FieldProfile {
            residual: samples
                .into_iter()
                .map(|(z_cm, b_mg)| ResidualPoint { z_cm, b_mg })
                .collect(),
            ..Self::default()
        })
    }

    pub fn with_residual(mut self, residual: Vec<(f64, f64)>) -> Result<Self> {
        self.residual = Self::sampled(residual)?.residual;
        Ok(self)
    }

    pub fn has_residual(&self) -> bool {
        !self.residual.is_empty()
    }

    /// True when the field does not vary along z.
    pub fn is_uniform(&self) -> bool {
        self.b1 == 0.0 && self.b2 == 0.0 && self.residual.is_empty()
    }

    pub fn polynomial_at(&self, z: f64) -> f64 {
        self.b0 + z * (self.b1 + z * self.b2)
    }

    pub fn residual_at(&self, z: f64) -> f64 {
        let r = &self.residual;
        match r.len() {
            0 => 0.0,
            1 => {
                if z == r[0].z_cm {
                    r[0].b_mg
                } else {
                    0.0
                }
            }
            n => {
                if z < r[0].z_cm || z > r[n - 1].z_cm {
                    return 0.0;
                }
                let idx = r.partition_point(|p| p.z_cm <= z).clamp(1, n - 1);
                let (a, b) = (r[idx - 1], r[idx]);
                a.b_mg + (b.b_mg - a.b_mg) * (z - a.z_cm) / (b.z_cm - a.z_cm)
            }
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.polynomial_at(z) + self.residual_at(z)
    }

    pub fn negate(&self) -> FieldProfile {
        self.scaled(-1.0)
    }

    pub fn scaled(&self, factor: f64) -> FieldProfile {
        FieldProfile {
            b0: self.b0 * factor,
            b1: self.b1 * factor,
            b2: self.b2 * factor,
            residual: self
                .residual
                .iter()
                .map(|p| ResidualPoint {
                    z_cm: p.z_cm,
                    b_mg: p.b_mg * factor,
                })
                .collect(),
        }
    }

    /// Largest |B| over `[lo, hi]`, checking the polynomial extremum and
    /// every residual node.
    pub fn max_abs_on(&self, lo: f64, hi: f64) -> f64 {
        let mut candidates = vec![lo, hi];
        if self.b2 != 0.0 {
            let vertex = -self.b1 / (2.0 * self.b2);
            if vertex > lo && vertex < hi {
                candidates.push(vertex);
            }
        }
        for p in &self.residual {
            if p.z_cm > lo && p.z_cm < hi {
                candidates.push(p.z_cm);
                candidates.push(p.z_cm - 1e-12);
            }
        }
        candidates
            .into_iter()
            .map(|z| self.eval(z).abs())
            .fold(0.0, f64::max)
    }
}

/// Coefficient-wise sum; residuals are summed on the union of both grids.
pub fn compose(a: &FieldProfile, b: &FieldProfile) -> FieldProfile {
    let mut grid: Vec<f64> = a
        .residual
        .iter()
        .chain(&b.residual)
        .map(|p| p.z_cm)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    FieldProfile {
        b0: a.b0 + b.b0,
        b1: a.b1 + b.b1,
        b2: a.b2 + b.b2,
        residual: grid
            .into_iter()
            .map(|z| ResidualPoint {
                z_cm: z,
                b_mg: a.residual_at(z) + b.residual_at(z),
            })
            .collect(),
    }
}

/// Points and weights over which a sampled field is reduced to (b0, b1, b2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSupport {
    pub center: f64,
    /// rms width of the atomic density, cm. Weights are `exp(-(z-c)²/2σ²)`.
    pub sigma: f64,
    pub half_width: f64,
    pub points: usize,
}

impl FitSupport {
    /// ±2σ around the cloud center.
    pub fn around(center: f64, sigma: f64) -> Self {
        FitSupport {
            center,
            sigma,
            half_width: 2.0 * sigma,
            points: 401,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.points.max(2);
        let (lo, hi) = self.bounds();
        (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
    }

    fn weight(&self, z: f64) -> f64 {
        let u = (z - self.center) / self.sigma;
        (-0.5 * u * u).exp()
    }
}

/// Density-weighted least-squares quadratic through `(z, B)` samples.
/// Returns the coefficients in z (not in the scaled variable).
pub fn fit_quadratic(samples: &[(f64, f64)], support: &FitSupport) -> Result<[f64; 3]> {
    if samples.len() < 3 {
        return Err(Error::InvalidInput(
            "quadratic fit needs at least three samples".into(),
        ));
    }
    let scale = support.half_width.max(f64::MIN_POSITIVE);
    let c = support.center;
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for &(z, b) in samples {
        let w = support.weight(z);
        let u = (z - c) / scale;
        let basis = Vector3::new(1.0, u, u * u);
        normal += w * basis * basis.transpose();
        rhs += w * b * basis;
    }
    let p = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidInput("degenerate support for quadratic fit".into()))?;
    let (p0, p1, p2) = (p[0], p[1] / scale, p[2] / (scale * scale));
    Ok([p0 - p1 * c + p2 * c * c, p1 - 2.0 * p2 * c, p2])
}

/// Fictitious field of a spatially shaped beam, reduced to quadratic
/// coefficients over `support` plus the sampled fit residual.
pub fn fictitious_profile(
    atom: &AtomSystem,
    beam: &BeamConfig,
    support: &FitSupport,
) -> Result<FieldProfile> {
    let samples = support
        .grid()
        .map(|z| {
            let intensity = beam.intensity.at(z);
            if intensity < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "negative intensity {intensity} at z = {z} cm"
                )));
            }
            Ok((z, fictitious_field_at(atom, beam, intensity)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let [b0, b1, b2] = fit_quadratic(&samples, support)?;
    let profile = FieldProfile::polynomial(b0, b1, b2);
    let scale = samples.iter().map(|(_, b)| b.abs()).fold(0.0, f64::max);
    let residual: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(z, b)| (z, b - profile.polynomial_at(z)))
        .collect();
    if residual
        .iter()
        .all(|(_, r)| r.abs() <= 1e-12 * (1.0 + scale))
    {
        return Ok(profile);
    }
    profile.with_residual(residual)
}

/// Piecewise-constant field history, one profile per experimental cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTimeSeries {
    samples: Vec<(f64, FieldProfile)>,
}

impl FieldTimeSeries {
    pub fn new(samples: Vec<(f64, FieldProfile)>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidInput(
                "time-series keys must be strictly increasing".into(),
            ));
        }
        Ok(FieldTimeSeries { samples })
    }

    /// Bias-only series keyed by cycle index 0, 1, 2, ...
    pub fn from_bias_values(values: &[f64]) -> Self {
        FieldTimeSeries {
            samples: values
                .iter()
                .enumerate()
                .map(|(i, &b)| (i as f64, FieldProfile::bias(b)))
                .collect(),
        }
    }

    pub fn samples(&self) -> &[(f64, FieldProfile)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn bias_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|(_, p)| p.b0)
    }

    /// Profile in force at `key` (the latest sample not after it).
    pub fn at(&self, key: f64) -> Option<&FieldProfile> {
        let idx = self.samples.partition_point(|(k, _)| *k <= key);
        idx.checked_sub(1).map(|i| &self.samples[i].1)
    }
}
