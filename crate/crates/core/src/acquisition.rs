//! Gradient Information (GI) acquisition.
//!
//! For an anchor `theta_t` and window inputs `X`, the GI value of a candidate
//! `theta` is
//!
//! ```text
//! Tr( dK(theta_t, Xh) (K(Xh, Xh) + s^2 I)^{-1} dK(theta_t, Xh)^T ),   Xh = [X, theta]
//! ```
//!
//! i.e. the prior gradient-covariance trace minus the trace of the gradient
//! covariance at `theta_t` after (virtually) observing `theta`. Targets never
//! enter. With the window factor `L` fixed, the bordered factor of `Xh` only
//! adds one row, so every candidate costs one triangular solve.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gp::{factor_points, CholeskyFactor, KernelParams};
use crate::optim::{self, AscentOptions, Bounds};
use crate::parallel::{map_slice, Execution};

/// Everything GI needs about the current iterate and local data.
#[derive(Debug, Clone)]
pub struct GiContext {
    anchor: Vec<f64>,
    points: Vec<Vec<f64>>,
    params: KernelParams,
    bound: f64,
    factor: CholeskyFactor,
    noise: f64,
    /// `L^{-1} dK(X, theta_t)`, `n x d`.
    whitened: DMatrix<f64>,
    /// `||whitened||_F^2`, the GI contribution of the existing window.
    window_trace: f64,
}

impl GiContext {
    pub fn new(anchor: &[f64], window_points: &[Vec<f64>], params: &KernelParams, bound: f64) -> Result<Self> {
        params.validate()?;
        Error::check_dim(params.dim(), anchor.len())?;
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::InvalidInput(format!("acquisition bound must be positive, got {bound}")));
        }
        let (factor, noise) = factor_points(window_points, params)?;
        let whitened = crate::gp::posterior::whitened_cross_gradient(&factor, window_points, anchor, params);
        let window_trace = whitened.iter().map(|v| v * v).sum();
        Ok(Self {
            anchor: anchor.to_vec(),
            points: window_points.to_vec(),
            params: params.clone(),
            bound,
            factor,
            noise,
            whitened,
            window_trace,
        })
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::around(&self.anchor, self.bound)
    }

    /// Trace of the prior gradient covariance, `sf2 * sum 1/l_i^2`.
    pub fn prior_trace(&self) -> f64 {
        self.params.signal_variance * self.params.precision_diag().sum()
    }

    /// GI value of the existing window alone (the candidate-independent part).
    pub fn window_value(&self) -> f64 {
        self.window_trace
    }

    pub fn gi_value(&self, candidate: &[f64]) -> Result<f64> {
        Error::check_dim(self.dim(), candidate.len())?;
        self.value_unchecked(candidate)
    }

    fn value_unchecked(&self, candidate: &[f64]) -> Result<f64> {
        let d = self.dim();
        let mut s12: Vec<f64> = self.points.iter().map(|p| self.params.k(p, candidate)).collect();
        self.factor.solve_lower_in_place(&mut s12);
        let schur = self.params.signal_variance + self.noise - s12.iter().map(|v| v * v).sum::<f64>();
        if !(schur > 0.0) {
            return Err(Error::NotPositiveDefinite {
                row: self.points.len(),
                pivot: schur,
            });
        }
        let mut g = vec![0.0; d];
        self.params.grad1_into(&self.anchor, candidate, &mut g);
        let mut extra = 0.0;
        for (j, gj) in g.iter().enumerate() {
            let proj: f64 = self.whitened.column(j).iter().zip(&s12).map(|(w, s)| w * s).sum();
            let r = gj - proj;
            extra += r * r;
        }
        Ok(self.window_trace + extra / schur)
    }
}

/// Free-function form of [`GiContext::gi_value`].
pub fn gi_value(candidate: &[f64], ctx: &GiContext) -> Result<f64> {
    ctx.gi_value(candidate)
}

#[derive(Debug, Clone, Copy)]
pub struct GiOptions {
    /// Number of local ascents.
    pub restarts: usize,
    /// Iteration cap per local ascent.
    pub max_iter: usize,
    pub exec: Execution,
}

impl Default for GiOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iter: 100,
            exec: Execution::Sequential,
        }
    }
}

/// Maximizes GI inside `[theta_t - bound, theta_t + bound]`.
///
/// Candidate starts are `restarts` uniform draws from the box followed by the
/// axis points `theta_t +- bound/2 e_i`. The `restarts` best starts (stable
/// order on ties) are refined by bounded quasi-Newton ascent on
/// forward-difference gradients; the first maximal result wins.
pub fn maximize_gi<R: Rng + ?Sized>(ctx: &GiContext, opts: &GiOptions, rng: &mut R) -> Result<Vec<f64>> {
    if opts.restarts == 0 {
        return Err(Error::InvalidInput("maximize_gi needs at least one restart".into()));
    }
    let d = ctx.dim();
    let bounds = ctx.bounds();
    let mut starts: Vec<Vec<f64>> = (0..opts.restarts)
        .map(|_| {
            bounds
                .lower
                .iter()
                .zip(&bounds.upper)
                .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                .collect()
        })
        .collect();
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut p = ctx.anchor.clone();
            p[i] += sign * 0.5 * ctx.bound;
            starts.push(p);
        }
    }

    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(starts.len());
    for (i, s) in starts.iter().enumerate() {
        scored.push((i, ctx.value_unchecked(s)?));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let chosen: Vec<(usize, f64)> = {
        let mut c: Vec<(usize, f64)> = scored.into_iter().take(opts.restarts).collect();
        c.sort_by_key(|(i, _)| *i);
        c
    };

    let step = 1e-6 * ctx.bound.max(1e-3);
    let ascent = AscentOptions {
        max_iter: opts.max_iter,
        grad_tol: 1e-10,
        value_tol: 1e-12,
    };
    let refined = map_slice(opts.exec, &chosen, |(i, _)| {
        let value = |x: &[f64]| ctx.value_unchecked(x).unwrap_or(f64::NEG_INFINITY);
        let objective = |x: &[f64]| {
            let fx = value(x);
            let mut inner = |y: &[f64]| ctx.value_unchecked(y).unwrap_or(f64::NEG_INFINITY);
            let g = optim::forward_difference(&mut inner, x, fx, &bounds, step);
            (fx, g)
        };
        let r = optim::maximize(objective, &starts[*i], &bounds, &ascent);
        (r.x, r.value)
    });

    let mut best: Option<(Vec<f64>, f64)> = None;
    for (x, v) in refined {
        if v.is_finite() && best.as_ref().map_or(true, |(_, bv)| v > *bv) {
            best = Some((x, v));
        }
    }
    let (mut x, _) = best.ok_or_else(|| Error::NotPositiveDefinite {
        row: ctx.points.len(),
        pivot: f64::NAN,
    })?;
    bounds.clamp(&mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn params_1d() -> KernelParams {
        KernelParams::new(vec![0.2], 1.0, 0.01).unwrap()
    }

    #[test]
    fn anchor_itself_carries_no_information() {
        let ctx = GiContext::new(&[0.3], &[], &params_1d(), 0.5).unwrap();
        assert_eq!(ctx.gi_value(&[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn empty_window_is_symmetric() {
        let ctx = GiContext::new(&[0.3], &[], &params_1d(), 0.5).unwrap();
        for delta in [0.01, 0.1, 0.2, 0.37] {
            let a = ctx.gi_value(&[0.3 + delta]).unwrap();
            let b = ctx.gi_value(&[0.3 - delta]).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_bound_and_restarts() {
        assert!(GiContext::new(&[0.0], &[], &params_1d(), 0.0).is_err());
        let ctx = GiContext::new(&[0.0], &[], &params_1d(), 0.1).unwrap();
        let opts = GiOptions {
            restarts: 0,
            ..Default::default()
        };
        assert!(maximize_gi(&ctx, &opts, &mut seeded(0)).is_err());
    }

    #[test]
    fn result_is_inside_box() {
        let p = KernelParams::new(vec![0.3, 0.1], 1.0, 0.01).unwrap();
        let window = vec![vec![0.5, 0.5], vec![0.55, 0.45]];
        let ctx = GiContext::new(&[0.5, 0.5], &window, &p, 0.05).unwrap();
        for s in 0..5 {
            let x = maximize_gi(&ctx, &GiOptions::default(), &mut seeded(s)).unwrap();
            assert!(ctx.bounds().contains(&x));
        }
    }

    #[test]
    fn gi_is_non_negative() {
        let p = KernelParams::new(vec![0.3, 0.1], 1.0, 0.01).unwrap();
        let window = vec![vec![0.5, 0.5], vec![0.55, 0.45], vec![0.4, 0.6]];
        let ctx = GiContext::new(&[0.52, 0.5], &window, &p, 0.2).unwrap();
        let mut r = seeded(9);
        for _ in 0..50 {
            let c = [r.random_range(0.3..0.7), r.random_range(0.3..0.7)];
            assert!(ctx.gi_value(&c).unwrap() >= 0.0);
        }
    }
}
