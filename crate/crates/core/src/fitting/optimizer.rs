//! Box-constrained Nelder-Mead simplex search.
//!
//! Trial points are projected onto the box before evaluation. Coefficients
//! scale with the dimension so that expansions and contractions stay
//! moderate in many dimensions. After the
//! simplex collapses the search restarts from the best point with a fresh,
//! seeded simplex until a restart no longer improves the objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Relative spread of objective values across the simplex that ends a pass.
    pub rel_tol: f64,
    /// Absolute spread that ends a pass.
    pub abs_tol: f64,
    /// Simplex diameter (in search coordinates) that ends a pass.
    pub x_tol: f64,
    pub max_evals: usize,
    pub max_restarts: usize,
    /// Initial simplex edge as a fraction of each coordinate's box width.
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-15,
            x_tol: 1e-10,
            max_evals: 20_000,
            max_restarts: 4,
            initial_step: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out before the simplex collapsed.
    pub converged: bool,
}

/// Reflection, expansion, contraction and shrink coefficients for `n`
/// dimensions; the expansion and contraction steps shorten as `n` grows.
fn coefficients(n: usize) -> (f64, f64, f64, f64) {
    let n = n.max(2) as f64;
    (1.0, 1.0 + 2.0 / n, 0.75 - 0.5 / n, 1.0 - 1.0 / n)
}

struct Search<'a, F> {
    f: F,
    low: &'a [f64],
    high: &'a [f64],
    evals: usize,
    max_evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Search<'_, F> {
    fn project(&self, x: &mut [f64]) {
        for ((xi, lo), hi) in x.iter_mut().zip(self.low).zip(self.high) {
            *xi = xi.clamp(*lo, *hi);
        }
    }

    /// Unevaluated points beyond the budget score `+inf`.
    fn eval(&mut self, x: &[f64]) -> f64 {
        if self.exhausted() {
            return f64::INFINITY;
        }
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    /// One simplex pass from `start`; returns `(best x, best f, collapsed)`.
    fn pass(&mut self, start: &[f64], f_start: f64, steps: &[f64], opts: &SearchOptions) -> (Vec<f64>, f64, bool) {
        let n = start.len();
        let (reflect, expand, contract, shrink) = coefficients(n);
        let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
        let mut vals = vec![f_start];
        for i in 0..n {
            let mut p = start.to_vec();
            let up = p[i] + steps[i];
            p[i] = if up <= self.high[i] { up } else { p[i] - steps[i] };
            self.project(&mut p);
            if self.exhausted() {
                return (start.to_vec(), f_start, false);
            }
            vals.push(self.eval(&p));
            pts.push(p);
        }
        loop {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            pts = order.iter().map(|&i| pts[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();

            let (best, worst) = (vals[0], vals[n]);
            let spread_ok = worst.is_finite()
                && worst - best <= opts.abs_tol + opts.rel_tol * best.abs();
            let diameter = pts[1..]
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(&pts[0])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max)
                })
                .fold(0.0f64, f64::max);
            if spread_ok || diameter <= opts.x_tol {
                return (pts[0].clone(), best, true);
            }
            if self.exhausted() {
                return (pts[0].clone(), best, false);
            }

            let mut centroid = vec![0.0; n];
            for p in &pts[..n] {
                for (c, x) in centroid.iter_mut().zip(p) {
                    *c += x / n as f64;
                }
            }
            let toward = |coef: f64, from: &[f64]| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(from)
                    .map(|(c, w)| c + coef * (c - w))
                    .collect()
            };

            let mut xr = toward(reflect, &pts[n]);
            self.project(&mut xr);
            let fr = self.eval(&xr);
            if fr < vals[0] {
                let mut xe = toward(expand, &pts[n]);
                self.project(&mut xe);
                let fe = self.eval(&xe);
                if fe < fr {
                    pts[n] = xe;
                    vals[n] = fe;
                } else {
                    pts[n] = xr;
                    vals[n] = fr;
                }
                continue;
            }
            if fr < vals[n - 1] {
                pts[n] = xr;
                vals[n] = fr;
                continue;
            }
            let (mut xc, outside) = if fr < vals[n] {
                (toward(contract, &pts[n]), true)
            } else {
                (toward(-contract, &pts[n]), false)
            };
            self.project(&mut xc);
            let fc = self.eval(&xc);
            if (outside && fc <= fr) || (!outside && fc < vals[n]) {
                pts[n] = xc;
                vals[n] = fc;
                continue;
            }
            for i in 1..=n {
                if self.exhausted() {
                    break;
                }
                let p: Vec<f64> = pts[0]
                    .iter()
                    .zip(&pts[i])
                    .map(|(b, x)| b + shrink * (x - b))
                    .collect();
                vals[i] = self.eval(&p);
                pts[i] = p;
            }
        }
    }
}

/// Minimize `f` over the box `[low, high]` starting from `x0` (projected into
/// the box). Non-finite objective values are treated as `+inf`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    low: &[f64],
    high: &[f64],
    opts: &SearchOptions,
) -> SearchResult {
    assert!(x0.len() == low.len() && x0.len() == high.len());
    let mut search = Search {
        f,
        low,
        high,
        evals: 0,
        max_evals: opts.max_evals.max(1),
    };
    let mut x = x0.to_vec();
    search.project(&mut x);
    let mut fx = search.eval(&x);
    if x.is_empty() {
        return SearchResult {
            x,
            f: fx,
            evaluations: search.evals,
            converged: true,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let widths: Vec<f64> = low.iter().zip(high).map(|(l, h)| h - l).collect();
    let mut steps: Vec<f64> = widths.iter().map(|w| opts.initial_step * w).collect();
    let mut converged = false;
    for restart in 0..=opts.max_restarts {
        let (bx, bf, collapsed) = search.pass(&x, fx, &steps, opts);
        let improved = bf < fx - (opts.abs_tol + opts.rel_tol * fx.abs());
        if bf < fx {
            x = bx;
            fx = bf;
        }
        if !collapsed {
            converged = false;
            break;
        }
        converged = true;
        if (restart > 0 && !improved) || search.exhausted() {
            break;
        }
        // perturbed edge lengths so successive passes explore different directions
        steps = widths
            .iter()
            .map(|w| opts.initial_step * w * rng.gen_range(0.5..1.5))
            .collect();
    }
    SearchResult {
        x,
        f: fx,
        evaluations: search.evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(f, &[-1.2, 1.0], &[-2.0, -2.0], &[2.0, 2.0], &SearchOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn optimum_on_the_boundary() {
        let f = |x: &[f64]| (x[0] + 3.0).powi(2) + (x[1] - 0.25).powi(2);
        let opts = SearchOptions {
            rel_tol: 1e-14,
            ..Default::default()
        };
        let r = minimize(f, &[0.5, 0.5], &[0.0, 0.0], &[1.0, 1.0], &opts);
        assert_eq!(r.x[0], 0.0);
        assert!((r.x[1] - 0.25).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
        let opts = SearchOptions {
            max_evals: 15,
            ..Default::default()
        };
        let r = minimize(f, &[0.9; 5], &[0.0; 5], &[1.0; 5], &opts);
        assert!(!r.converged);
        assert!(r.evaluations <= 15);
        assert!(r.f <= f(&[0.9; 5]));
    }

    #[test]
    fn deterministic_and_never_worse() {
        let f = |x: &[f64]| (x[0] * 3.0).sin() + x[1].cos() * x[0];
        let run = || minimize(f, &[0.1, 0.2], &[-1.0, -1.0], &[1.0, 1.0], &SearchOptions::default());
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert!(a.f <= f(&[0.1, 0.2]));
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { (x[0] - 0.4).powi(2) };
        let r = minimize(f, &[0.1], &[0.0], &[1.0], &SearchOptions::default());
        assert!((r.x[0] - 0.4).abs() < 1e-4);
    }
}
