//! Objectives drawn from a GP prior: 1000 jointly sampled values at Sobol
//! points, interpolated by the GP posterior mean.

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::lengthscale::sample_lengthscale;
use super::sobol::Sobol;
use crate::error::{Error, Result};
use crate::gp::KernelParams;
use crate::optim::{self, AscentOptions, Bounds};
use crate::oracle::Oracle;
use crate::rng::seeded;

pub const SUPPORT_POINTS: usize = 1000;
pub const SIGNAL_VARIANCE: f64 = 1.0;
/// Standard deviation of the observation noise.
pub const NOISE_STD: f64 = 0.1;
/// Diagonal jitter used for the joint sample; raised tenfold on failure.
const SAMPLE_JITTER: f64 = 1e-8;
/// The global-max search may leave the unit cube by this much on each side.
const MAX_ASCENT_STARTS: usize = 5;
const MAX_ASCENT_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticObjective {
    pub dim: usize,
    pub seed: u64,
    /// Generating kernel; `noise_variance` is the observation noise.
    pub params: KernelParams,
    pub points: Vec<Vec<f64>>,
    /// `J` at the support points.
    pub values: Vec<f64>,
    /// Representer weights, `J(x) = sum_i alpha_i k(x, x_i)`.
    alpha: Vec<f64>,
    pub jitter: f64,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// Whether the global-max ascent met its tolerance.
    pub max_converged: bool,
}

impl SyntheticObjective {
    /// Noiseless objective value.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.points
            .iter()
            .zip(&self.alpha)
            .map(|(p, a)| a * self.params.k(x, p))
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        let mut buf = vec![0.0; self.dim];
        for (p, a) in self.points.iter().zip(&self.alpha) {
            self.params.grad1_into(x, p, &mut buf);
            for (gi, bi) in g.iter_mut().zip(&buf) {
                *gi += a * bi;
            }
        }
        g
    }

    /// `J(x) + N(0, 0.1^2)`.
    pub fn evaluate_noisy<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> f64 {
        self.value(x) + NOISE_STD * rng.sample::<f64, _>(StandardNormal)
    }

    /// Center of the unit cube, where every optimizer starts.
    pub fn start(&self) -> Vec<f64> {
        vec![0.5; self.dim]
    }

    pub fn lengthscale(&self) -> f64 {
        self.params.lengthscales[0]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Samples a `d`-dimensional objective.
///
/// Support values are drawn as `L z` with `L L^T = K + jitter I`; the
/// objective is the representer expansion with `alpha = L^{-T} z`, and the
/// stored `values` are that expansion evaluated at the support points (they
/// differ from the raw draw by `jitter * alpha`).
pub fn generate_objective(d: usize, seed: u64) -> Result<SyntheticObjective> {
    let mut rng = seeded(seed);
    let lengthscale = sample_lengthscale(d, &mut rng);
    let params = KernelParams::isotropic(d, lengthscale, SIGNAL_VARIANCE, NOISE_STD * NOISE_STD)?;
    let points = Sobol::take_points(d, SUPPORT_POINTS)?;
    let n = points.len();
    let k = DMatrix::from_fn(n, n, |i, j| params.k(&points[i], &points[j]));
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));

    let mut jitter = SAMPLE_JITTER;
    let chol = loop {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter * SIGNAL_VARIANCE;
        }
        if let Some(c) = Cholesky::new(kj) {
            break c;
        }
        jitter *= 10.0;
        if jitter > 1e-2 {
            return Err(Error::NotPositiveDefinite { row: n, pivot: f64::NAN });
        }
    };
    let alpha = chol
        .l()
        .tr_solve_lower_triangular(&z)
        .ok_or_else(|| Error::NotPositiveDefinite { row: n, pivot: 0.0 })?;
    let values = (&k * &alpha).iter().copied().collect();

    let mut obj = SyntheticObjective {
        dim: d,
        seed,
        params,
        points,
        values,
        alpha: alpha.iter().copied().collect(),
        jitter,
        x_star: vec![],
        f_star: f64::NEG_INFINITY,
        max_converged: false,
    };
    let (x_star, f_star, converged) = approx_global_max(&obj);
    if !converged {
        log::warn!("global-max ascent for seed {seed} (d = {d}) did not converge");
    }
    obj.x_star = x_star;
    obj.f_star = f_star;
    obj.max_converged = converged;
    Ok(obj)
}

/// Deterministic ascent on the noiseless objective from the best support
/// points, confined to the unit cube; returns `(x*, f*, converged)` with
/// `f* >= max(values)`.
pub fn approx_global_max(obj: &SyntheticObjective) -> (Vec<f64>, f64, bool) {
    let mut order: Vec<usize> = (0..obj.values.len()).collect();
    order.sort_by(|&a, &b| obj.values[b].total_cmp(&obj.values[a]));
    // restricted to the unit cube: just outside it the interpolant can overshoot
    let bounds = Bounds::new(vec![0.0; obj.dim], vec![1.0; obj.dim]);
    let opts = AscentOptions {
        max_iter: MAX_ASCENT_ITER,
        grad_tol: 1e-9,
        value_tol: 1e-15,
    };
    let first = order[0];
    let mut best = (obj.points[first].clone(), obj.values[first], false);
    for &i in order.iter().take(MAX_ASCENT_STARTS) {
        let r = optim::maximize(|x| (obj.value(x), obj.gradient(x)), &obj.points[i], &bounds, &opts);
        if r.value > best.1 || (i == first && r.value >= best.1) {
            best = (r.x, r.value, r.converged);
        }
    }
    best
}

/// Oracle adapter adding seeded Gaussian noise.
pub struct SyntheticOracle<'a, R> {
    pub objective: &'a SyntheticObjective,
    pub rng: R,
}

impl<'a, R: Rng> Oracle for SyntheticOracle<'a, R> {
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        Error::check_dim(self.objective.dim, theta.len())?;
        Ok(self.objective.evaluate_noisy(theta, &mut self.rng))
    }
}

pub fn evaluate_noisy<R: Rng + ?Sized>(obj: &SyntheticObjective, theta: &[f64], rng: &mut R) -> f64 {
    obj.evaluate_noisy(theta, rng)
}
