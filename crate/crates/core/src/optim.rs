//! Box-constrained quasi-Newton ascent.
//!
//! A projected BFGS iteration with Armijo backtracking along the projected
//! path. Used for GP hyperparameter fitting, GI acquisition maximization and
//! EI maximization; none of these need more than a few dozen variables.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    /// Axis-aligned box `[center - half_width, center + half_width]`.
    pub fn around(center: &[f64], half_width: f64) -> Self {
        Self {
            lower: center.iter().map(|c| c - half_width).collect(),
            upper: center.iter().map(|c| c + half_width).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, lo), hi)| *v >= *lo && *v <= *hi)
    }

    fn widest(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AscentOptions {
    pub max_iter: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub grad_tol: f64,
    /// Stop when an accepted step improves the value by less than
    /// `value_tol * (1 + |f|)`.
    pub value_tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-8,
            value_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `f` inside `bounds` starting from `x0` (clamped into the box).
///
/// `f` returns the value and its gradient. Non-finite values are treated as
/// infeasible and rejected by the line search. The returned value is never
/// below the value at the (clamped) start point.
pub fn maximize<F>(mut f: F, x0: &[f64], bounds: &Bounds, opts: &AscentOptions) -> AscentResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() {
        return AscentResult {
            x,
            value: fx,
            iterations: 0,
            converged: false,
        };
    }
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    let max_step = bounds.widest().max(f64::MIN_POSITIVE);

    for it in 0..opts.max_iter {
        let pg = projected_gradient(&x, &g, bounds);
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < opts.grad_tol {
            return AscentResult {
                x,
                value: fx,
                iterations: it,
                converged: true,
            };
        }
        let free: Vec<bool> = pg.iter().map(|v| *v != 0.0).collect();

        let gv = DVector::from_iterator(n, (0..n).map(|i| if free[i] { g[i] } else { 0.0 }));
        let mut p = &h * &gv;
        for i in 0..n {
            if !free[i] {
                p[i] = 0.0;
            }
        }
        if p.dot(&gv) <= 0.0 {
            h.fill_with_identity();
            p = gv.clone();
        }
        let mut t = 1.0;
        let pmax = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if first || pmax * t > max_step {
            // cap the first (unscaled) step to a fraction of the box
            t = (0.25 * max_step / pmax).min(1.0);
        }

        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + t * b).collect();
            bounds.clamp(&mut xn);
            let step_dot: f64 = (0..n).map(|i| g[i] * (xn[i] - x[i])).sum();
            if step_dot <= 0.0 {
                t *= 0.5;
                continue;
            }
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && fn_ >= fx + 1e-4 * step_dot {
                accepted = Some((xn, fn_, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return AscentResult {
                x,
                value: fx,
                iterations: it,
                converged: true,
            };
        };
        first = false;

        // BFGS on the minimization problem -f.
        let s = DVector::from_iterator(n, (0..n).map(|i| xn[i] - x[i]));
        let y = DVector::from_iterator(n, (0..n).map(|i| g[i] - gn[i]));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s (Hy)^T + Hy s^T) + (rho^2 yHy + rho) s s^T
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
        }

        let improvement = fn_ - fx;
        x = xn;
        fx = fn_;
        g = gn;
        if improvement < opts.value_tol * (1.0 + fx.abs()) {
            return AscentResult {
                x,
                value: fx,
                iterations: it + 1,
                converged: true,
            };
        }
    }
    AscentResult {
        x,
        value: fx,
        iterations: opts.max_iter,
        converged: false,
    }
}

fn projected_gradient(x: &[f64], g: &[f64], bounds: &Bounds) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|((xi, gi), (lo, hi))| {
            if (*xi <= *lo && *gi < 0.0) || (*xi >= *hi && *gi > 0.0) {
                0.0
            } else {
                *gi
            }
        })
        .collect()
}

/// Forward-difference gradient that steps inward at the upper bound.
pub fn forward_difference<F>(f: &mut F, x: &[f64], fx: f64, bounds: &Bounds, step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = if x[i] + step > bounds.upper[i] { -step } else { step };
            xp[i] = x[i] + h;
            let v = f(&xp);
            xp[i] = x[i];
            (v - fx) / h
        })
        .collect()
}
