//! Bounded derivative-free minimization: multi-start coordinate descent
//! with geometric step shrinking, then a Nelder–Mead polish around the best
//! point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Initial coordinate step; defaults to a quarter of the box width.
    pub initial_step: Option<Vec<f64>>,
    pub shrink: f64,
    /// Relative (to the box width) step below which descent stops.
    pub min_step: f64,
    /// Random starts added after the caller's seeds.
    pub random_starts: usize,
    pub seed: u64,
    /// Fraction of the budget reserved for the simplex polish.
    pub polish_fraction: f64,
}

impl SearchOptions {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, budget: usize) -> Self {
        SearchOptions {
            budget,
            lower,
            upper,
            initial_step: None,
            shrink: 0.5,
            min_step: 1e-6,
            random_starts: 2,
            seed: 0,
            polish_fraction: 0.3,
        }
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Best-so-far objective after each evaluation.
    pub trace: Vec<f64>,
}

struct Counter<'a, F> {
    f: &'a F,
    opts: &'a SearchOptions,
    best_x: Vec<f64>,
    best: f64,
    trace: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64> Counter<'_, F> {
    fn exhausted(&self) -> bool {
        self.trace.len() >= self.opts.budget
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.exhausted() {
            return None;
        }
        let mut v = (self.f)(x);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        if v < self.best {
            self.best = v;
            self.best_x = x.to_vec();
        }
        self.trace.push(self.best);
        Some(v)
    }
}

/// Minimizes `f` inside the box, starting from each of `starts` in turn.
/// The result is a deterministic function of the inputs and `opts.seed`.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    starts: &[Vec<f64>],
    opts: &SearchOptions,
) -> SearchResult {
    let n = opts.lower.len();
    assert_eq!(opts.upper.len(), n, "bound lengths differ");
    let width: Vec<f64> = opts
        .lower
        .iter()
        .zip(&opts.upper)
        .map(|(l, u)| u - l)
        .collect();
    let mut all_starts: Vec<Vec<f64>> = starts.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        all_starts.push(
            opts.lower
                .iter()
                .zip(&opts.upper)
                .map(|(&l, &u)| if u > l { rng.random_range(l..=u) } else { l })
                .collect(),
        );
    }
    if all_starts.is_empty() {
        all_starts.push(
            opts.lower
                .iter()
                .zip(&opts.upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
        );
    }

    let mut c = Counter {
        f: &f,
        opts,
        best_x: all_starts[0].clone(),
        best: f64::INFINITY,
        trace: Vec::new(),
    };
    let descent_budget = ((opts.budget as f64) * (1.0 - opts.polish_fraction)).ceil() as usize;
    let per_start = (descent_budget / all_starts.len()).max(2 * n + 1);
    let step0 = opts
        .initial_step
        .clone()
        .unwrap_or_else(|| width.iter().map(|w| 0.25 * w).collect());

    let mut seeded: Vec<(Vec<f64>, Option<f64>)> = all_starts
        .into_iter()
        .map(|mut x| {
            opts.clamp(&mut x);
            (x, None)
        })
        .collect();
    for (x, fx) in seeded.iter_mut().take(starts.len()) {
        *fx = c.eval(x);
    }

    let mut last_step = step0.clone();
    for (x, cached) in seeded {
        if c.trace.len() >= descent_budget {
            break;
        }
        let stop_at = (c.trace.len() + per_start).min(descent_budget);
        let mut x = x;
        let Some(mut fx) = cached.or_else(|| c.eval(&x)) else {
            break;
        };
        let mut step = step0.clone();
        while c.trace.len() < stop_at
            && step
                .iter()
                .zip(&width)
                .any(|(s, w)| *s > opts.min_step * w.max(1e-300))
        {
            let mut improved = false;
            for i in 0..n {
                for dir in [1.0, -1.0] {
                    if c.trace.len() >= stop_at {
                        break;
                    }
                    let mut y = x.clone();
                    y[i] += dir * step[i];
                    opts.clamp(&mut y);
                    if y[i] == x[i] {
                        continue;
                    }
                    let Some(fy) = c.eval(&y) else { break };
                    if fy < fx {
                        x = y;
                        fx = fy;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step.iter_mut().for_each(|s| *s *= opts.shrink);
            }
        }
        last_step = step;
    }

    let scale: Vec<f64> = last_step
        .iter()
        .zip(&width)
        .map(|(s, w)| (4.0 * s).max(1e-3 * w))
        .collect();
    let x0 = c.best_x.clone();
    nelder_mead(&mut c, x0, &scale);

    SearchResult {
        x: c.best_x,
        value: c.best,
        evaluations: c.trace.len(),
        trace: c.trace,
    }
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(c: &mut Counter<'_, F>, x0: Vec<f64>, scale: &[f64]) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let Some(f0) = c.eval(&x0) else { return };
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut y = x0.clone();
        y[i] += scale[i];
        if y[i] > c.opts.upper[i] {
            y[i] = x0[i] - scale[i];
        }
        c.opts.clamp(&mut y);
        let Some(fy) = c.eval(&y) else { return };
        simplex.push((y, fy));
    }
    let point = |base: &[f64], toward: &[f64], t: f64, opts: &SearchOptions| {
        let mut p: Vec<f64> = base
            .iter()
            .zip(toward)
            .map(|(b, w)| b + t * (w - b))
            .collect();
        opts.clamp(&mut p);
        p
    };
    while !c.exhausted() {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() <= 1e-14 * simplex[0].1.abs().max(1e-300) && simplex[n].0 == simplex[0].0 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|p| p.0[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let xr = point(&centroid, &worst.0, -1.0, c.opts);
        let Some(fr) = c.eval(&xr) else { return };
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst.0, -2.0, c.opts);
            let Some(fe) = c.eval(&xe) else { return };
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = if fr < worst.1 {
                point(&centroid, &xr, 0.5, c.opts)
            } else {
                point(&centroid, &worst.0, 0.5, c.opts)
            };
            let Some(fc) = c.eval(&xc) else { return };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = point(&best, &p.0, 0.5, c.opts);
                    let Some(fp) = c.eval(&p.0) else { return };
                    p.1 = fp;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn finds_quadratic_minimum() {
        let f =
            |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + (x[2] - 0.2).powi(2);
        let opts = SearchOptions::new(vec![-5.0; 3], vec![5.0; 3], 2000);
        let r = minimize(f, &[vec![0.0; 3]], &opts);
        assert!(r.value < 1e-10, "value {}", r.value);
        assert!((r.x[0] - 1.5).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock_polish() {
        let opts = SearchOptions {
            polish_fraction: 0.8,
            ..SearchOptions::new(vec![-2.0; 2], vec![2.0; 2], 3000)
        };
        let r = minimize(rosenbrock, &[vec![-1.2, 1.0]], &opts);
        assert!(r.value < 1e-6, "value {}", r.value);
    }

    #[test]
    fn respects_bounds_and_budget() {
        let opts = SearchOptions::new(vec![0.0, 0.0], vec![1.0, 1.0], 57);
        let r = minimize(|x: &[f64]| -x[0] - x[1], &[vec![0.5, 0.5]], &opts);
        assert!(r.evaluations <= 57);
        assert_eq!(r.x, vec![1.0, 1.0]);
    }

    #[test]
    fn seed_start_is_never_beaten_by_worse() {
        let opts = SearchOptions::new(vec![-1.0], vec![1.0], 60);
        let r = minimize(|x: &[f64]| x[0].abs(), &[vec![0.0]], &opts);
        assert_eq!(r.value, 0.0);
        assert_eq!(r.trace[0], 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn trace_monotone_and_deterministic(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
            let f = |x: &[f64]| (x[0] - a).powi(2) + (x[1] - b).abs() + (5.0 * x[0]).sin();
            let opts = SearchOptions { seed, ..SearchOptions::new(vec![-4.0; 2], vec![4.0; 2], 120) };
            let r = minimize(f, &[vec![0.0, 0.0]], &opts);
            prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
            prop_assert_eq!(r.trace.last().copied(), Some(r.value));
            prop_assert_eq!(&r, &minimize(f, &[vec![0.0, 0.0]], &opts));
        }
    }
}
