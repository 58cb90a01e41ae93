use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_grid, DecayCurve, MemorySimulator};
use crate::error::{Error, Result};
use crate::field::FieldProfile;

/// Shot-to-shot fluctuation of the bias field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    /// Full range ΔB of the uniform bias distribution, mG.
    pub delta_b: f64,
    pub n_levels: usize,
    pub n_cycles: usize,
    pub seed: u64,
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_cycles == 0 || self.n_levels == 0 {
            return Err(Error::InvalidInput(
                "n_cycles and n_levels must be at least 1".into(),
            ));
        }
        if !(self.delta_b >= 0.0) || !self.delta_b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "fluctuation range {} must be non-negative",
                self.delta_b
            )));
        }
        Ok(())
    }
}

/// The `n_levels` equally spaced bias offsets spanning [−ΔB/2, ΔB/2].
pub fn bias_levels(delta_b: f64, n_levels: usize) -> Vec<f64> {
    if n_levels <= 1 || delta_b == 0.0 {
        return vec![0.0; n_levels.max(1)];
    }
    (0..n_levels)
        .map(|i| delta_b * (i as f64 / (n_levels - 1) as f64 - 0.5))
        .collect()
}

/// Per-cycle bias offsets, reproducible from the seed.
pub fn draw_bias_offsets(cfg: &MonteCarloConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let levels = bias_levels(cfg.delta_b, cfg.n_levels);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.n_cycles)
        .map(|_| levels[rng.random_range(0..levels.len())])
        .collect())
}

/// Mean decay over cycles whose bias is `base.b0 + offsets[k]` (plus
/// `compensation[k]` when given), with its 1/e lifetime.
pub fn average_decay(
    sim: &MemorySimulator,
    base: &FieldProfile,
    offsets: &[f64],
    compensation: Option<&[f64]>,
    t_grid: &[f64],
) -> Result<DecayCurve> {
    DecayCurve::from_samples(average_curve(sim, base, offsets, compensation, t_grid)?)
}

/// Sampled mean efficiency. Cycles with equal net bias share one
/// evaluation; groups are reduced in a fixed order.
pub fn average_curve(
    sim: &MemorySimulator,
    base: &FieldProfile,
    offsets: &[f64],
    compensation: Option<&[f64]>,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_grid(t_grid)?;
    if offsets.is_empty() {
        return Err(Error::InvalidInput("at least one cycle is required".into()));
    }
    if let Some(c) = compensation {
        if c.len() != offsets.len() {
            return Err(Error::InvalidInput(format!(
                "{} compensation values for {} cycles",
                c.len(),
                offsets.len()
            )));
        }
    }
    let mut groups: BTreeMap<u64, usize> = BTreeMap::new();
    for (k, &offset) in offsets.iter().enumerate() {
        let net = base.b0 + offset + compensation.map_or(0.0, |c| c[k]);
        // +0.0 and −0.0 give identical curves
        *groups.entry((net + 0.0).to_bits()).or_default() += 1;
    }
    let groups: Vec<(f64, usize)> = groups
        .into_iter()
        .map(|(bits, n)| (f64::from_bits(bits), n))
        .collect();
    let curves: Vec<Vec<f64>> = groups
        .par_iter()
        .map(|&(b0, _)| {
            let field = FieldProfile { b0, ..base.clone() };
            t_grid.iter().map(|&t| sim.efficiency(&field, t)).collect()
        })
        .collect();
    let n = offsets.len() as f64;
    let mut mean = vec![0.0; t_grid.len()];
    for ((_, count), curve) in groups.iter().zip(&curves) {
        let w = *count as f64 / n;
        for (m, eta) in mean.iter_mut().zip(curve) {
            *m += w * eta;
        }
    }
    Ok(t_grid.iter().copied().zip(mean).collect())
}

/// Draws the per-cycle biases from `cfg` and averages the decay.
pub fn montecarlo_lifetime(
    sim: &MemorySimulator,
    base: &FieldProfile,
    cfg: &MonteCarloConfig,
    t_grid: &[f64],
) -> Result<DecayCurve> {
    average_decay(sim, base, &draw_bias_offsets(cfg)?, None, t_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::load_rb85;
    use crate::memory::{time_grid, EnsembleConfig, Envelope};

    fn sim() -> MemorySimulator {
        MemorySimulator::new(
            &load_rb85(),
            EnsembleConfig::eit(1, Envelope::Gaussian { t_us: 100.0 }),
        )
        .unwrap()
    }

    #[test]
    fn levels_span_range() {
        let l = bias_levels(6.8, 13);
        assert_eq!(l.len(), 13);
        assert!((l[0] + 3.4).abs() < 1e-12 && (l[12] - 3.4).abs() < 1e-12);
        assert!((l[6]).abs() < 1e-12);
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let cfg = MonteCarloConfig {
            delta_b: 6.8,
            n_levels: 13,
            n_cycles: 500,
            seed: 42,
        };
        let a = draw_bias_offsets(&cfg).unwrap();
        assert_eq!(a, draw_bias_offsets(&cfg).unwrap());
        assert_ne!(
            a,
            draw_bias_offsets(&MonteCarloConfig { seed: 43, ..cfg }).unwrap()
        );
        let distinct: std::collections::BTreeSet<u64> = a.iter().map(|v| v.to_bits()).collect();
        assert_eq!(distinct.len(), 13);
    }

    #[test]
    fn zero_range_equals_plain_curve() {
        let s = sim();
        let grid = time_grid(300.0, 301);
        let base = FieldProfile::bias(1.5);
        let cfg = MonteCarloConfig {
            delta_b: 0.0,
            n_levels: 13,
            n_cycles: 200,
            seed: 7,
        };
        assert_eq!(
            montecarlo_lifetime(&s, &base, &cfg, &grid).unwrap(),
            s.decay_curve(&base, &grid).unwrap()
        );
    }

    #[test]
    fn fluctuations_shorten_and_compensation_restores() {
        let s = sim();
        let grid = time_grid(300.0, 3001);
        let base = FieldProfile::zero();
        let cfg = MonteCarloConfig {
            delta_b: 6.8,
            n_levels: 13,
            n_cycles: 400,
            seed: 11,
        };
        let reference = s.decay_curve(&base, &grid).unwrap().lifetime_1e;
        let offsets = draw_bias_offsets(&cfg).unwrap();
        let noisy = average_decay(&s, &base, &offsets, None, &grid)
            .unwrap()
            .lifetime_1e;
        assert!(noisy < reference);
        let cancel: Vec<f64> = offsets.iter().map(|o| -o).collect();
        let fixed = average_decay(&s, &base, &offsets, Some(&cancel), &grid)
            .unwrap()
            .lifetime_1e;
        assert!((fixed - reference).abs() <= 0.01 * reference);
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let s = sim();
        let grid = time_grid(200.0, 201);
        let cfg = MonteCarloConfig {
            delta_b: 10.0,
            n_levels: 7,
            n_cycles: 100,
            seed: 3,
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| montecarlo_lifetime(&s, &FieldProfile::bias(2.0), &cfg, &grid).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn invalid_configs() {
        let cfg = MonteCarloConfig {
            delta_b: 1.0,
            n_levels: 3,
            n_cycles: 0,
            seed: 0,
        };
        assert!(draw_bias_offsets(&cfg).is_err());
        assert!(average_decay(
            &sim(),
            &FieldProfile::zero(),
            &[1.0],
            Some(&[]),
            &[0.0, 1.0]
        )
        .is_err());
    }
}
