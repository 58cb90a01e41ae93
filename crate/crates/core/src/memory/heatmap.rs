use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LifetimeSearch, MemorySimulator};
use crate::error::{Error, Result};
use crate::field::FieldProfile;

/// Lifetime over a (B1, B2) grid, normalized to the field-free lifetime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub b1_values: Vec<f64>,
    pub b2_values: Vec<f64>,
    /// `tau_norm[i][j]` belongs to `b1_values[i]`, `b2_values[j]`.
    pub tau_norm: Vec<Vec<f64>>,
    /// Lifetime at B = 0, µs.
    pub tau_zero: f64,
}

impl Heatmap {
    /// Row-major (b1, b2, tau_norm) triples.
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.b1_values
            .iter()
            .zip(&self.tau_norm)
            .flat_map(move |(&b1, row)| {
                self.b2_values
                    .iter()
                    .zip(row)
                    .map(move |(&b2, &tau)| (b1, b2, tau))
            })
    }
}

/// τ(B1, B2)/τ(0, 0) evaluated in parallel; the result does not depend on
/// the thread count.
pub fn lifetime_heatmap(
    sim: &MemorySimulator,
    b1_values: &[f64],
    b2_values: &[f64],
    search: &LifetimeSearch,
) -> Result<Heatmap> {
    if b1_values.iter().chain(b2_values).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("heatmap ranges must be finite".into()));
    }
    let tau_zero = sim.lifetime(&FieldProfile::zero(), search)?;
    let grid: Vec<(f64, f64)> = b1_values
        .iter()
        .flat_map(|&b1| b2_values.iter().map(move |&b2| (b1, b2)))
        .collect();
    let taus = grid
        .par_iter()
        .map(|&(b1, b2)| {
            if b1 == 0.0 && b2 == 0.0 {
                Ok(tau_zero)
            } else {
                sim.lifetime(&FieldProfile::polynomial(0.0, b1, b2), search)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let tau_norm = taus
        .chunks(b2_values.len().max(1))
        .map(|row| row.iter().map(|t| t / tau_zero).collect())
        .collect();
    Ok(Heatmap {
        b1_values: b1_values.to_vec(),
        b2_values: b2_values.to_vec(),
        tau_norm,
        tau_zero,
    })
}
