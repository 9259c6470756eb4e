//! Average-cost LQR benchmark: Riccati and Lyapunov solvers, the exact
//! relative-error metric, and a noisy rollout oracle over linear gains.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::Oracle;
use crate::runstats::{normalize_state, WelfordState};

/// States with a larger Euclidean norm end the trajectory.
pub const OVERFLOW_NORM: f64 = 1e12;
const DARE_MAX_ITER: usize = 100_000;
const DARE_TOL: f64 = 1e-14;

/// `max |eigenvalue|`.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "spectral radius needs a square matrix");
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn riccati_map(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let bt_p = b.transpose() * p;
    let s = r + &bt_p * b;
    let gain = s.cholesky()?.solve(&(&bt_p * a));
    let at_p = a.transpose() * p;
    let next = &at_p * a - (&at_p * b) * gain + q;
    Some((&next + next.transpose()) * 0.5)
}

/// `P - (A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q)`, max-abs.
pub fn dare_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    match riccati_map(a, b, q, r, p) {
        Some(next) => max_abs(&(p - next)),
        None => f64::INFINITY,
    }
}

/// Optimal gain `K = -(R + B^T P B)^{-1} B^T P A` for a given `P`.
pub fn optimal_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let bt_p = b.transpose() * p;
    let s = r + &bt_p * b;
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("R + B^T P B is not positive definite".into()))?;
    Ok(-chol.solve(&(bt_p * a)))
}

/// Solves the discrete algebraic Riccati equation by fixed-point iteration of
/// the Riccati recursion from `P = Q`. Returns `(P, K)`.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n || q.shape() != (n, n) || r.shape() != (b.ncols(), b.ncols()) {
        return Err(Error::InvalidInput("inconsistent LQR matrix shapes".into()));
    }
    let mut p = q.clone();
    for it in 0..DARE_MAX_ITER {
        let next = riccati_map(a, b, q, r, &p)
            .ok_or_else(|| Error::InvalidInput("R + B^T P B is not positive definite".into()))?;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NoConvergence { iterations: it });
        }
        let change = max_abs(&(&next - &p));
        p = next;
        if change <= DARE_TOL * (1.0 + max_abs(&p)) {
            let k = optimal_gain(a, b, r, &p)?;
            return Ok((p, k));
        }
    }
    Err(Error::NoConvergence { iterations: DARE_MAX_ITER })
}

/// Solves `S = A S A^T + W` for a Schur-stable `A` via the vectorized
/// system `(I - A kron A) vec(S) = vec(W)`.
pub fn solve_dlyap(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || w.shape() != (n, n) {
        return Err(Error::InvalidInput("inconsistent Lyapunov matrix shapes".into()));
    }
    let rho = spectral_radius(a);
    if !(rho < 1.0) {
        return Err(Error::Unstable(rho));
    }
    let m = DMatrix::<f64>::identity(n * n, n * n) - a.kronecker(a);
    let rhs = DVector::from_column_slice(w.as_slice());
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Unstable(rho))?;
    let s = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&s + s.transpose()) * 0.5)
}

/// A linear feedback gain `u = K x` with `K` of shape `p x n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyGain(pub DMatrix<f64>);

impl PolicyGain {
    /// Row-major flattening.
    pub fn flatten(&self) -> Vec<f64> {
        let k = &self.0;
        (0..k.nrows()).flat_map(|i| (0..k.ncols()).map(move |j| k[(i, j)])).collect()
    }

    pub fn unflatten(theta: &[f64], p: usize, n: usize) -> Result<Self> {
        Error::check_dim(p * n, theta.len())?;
        Ok(Self(DMatrix::from_row_slice(p, n, theta)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqrInstance {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub w: DMatrix<f64>,
    /// Riccati solution.
    pub p: DMatrix<f64>,
    /// Optimal gain.
    pub k: DMatrix<f64>,
    /// Optimal average cost `Tr(W P)`.
    pub j_star: f64,
}

impl LqrInstance {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, q: DMatrix<f64>, r: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        if w.shape() != a.shape() {
            return Err(Error::InvalidInput("noise covariance shape must match A".into()));
        }
        let (p, k) = solve_dare(&a, &b, &q, &r)?;
        let j_star = (&w * &p).trace();
        Ok(Self { a, b, q, r, w, p, k, j_star })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Length of a flattened gain.
    pub fn gain_len(&self) -> usize {
        self.state_dim() * self.input_dim()
    }

    pub fn optimal_gain(&self) -> PolicyGain {
        PolicyGain(self.k.clone())
    }

    pub fn closed_loop(&self, gain: &PolicyGain) -> DMatrix<f64> {
        &self.a + &self.b * &gain.0
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

/// The slightly unstable 3-state benchmark system with unit noise covariance.
pub fn paper_instance() -> LqrInstance {
    let a = DMatrix::from_row_slice(3, 3, &[1.01, 0.01, 0.0, 0.01, 1.01, 0.01, 0.0, 0.01, 1.01]);
    let eye = DMatrix::<f64>::identity(3, 3);
    LqrInstance::new(a, eye.clone(), &eye * 1e-3, eye.clone(), eye).expect("benchmark instance is stabilizable")
}

/// `true` iff `A + B K` is Schur stable.
pub fn is_stabilizing(theta: &[f64], inst: &LqrInstance) -> bool {
    match PolicyGain::unflatten(theta, inst.input_dim(), inst.state_dim()) {
        Ok(g) => spectral_radius(&inst.closed_loop(&g)) < 1.0,
        Err(_) => false,
    }
}

/// `(J(K) - J*) / J*`; `+inf` when `K` does not stabilize the system.
pub fn relative_error(gain: &PolicyGain, inst: &LqrInstance) -> f64 {
    let acl = inst.closed_loop(gain);
    let sigma = match solve_dlyap(&acl, &inst.w) {
        Ok(s) => s,
        Err(_) => return f64::INFINITY,
    };
    let dk = &gain.0 - &inst.k;
    let s = &inst.r + inst.b.transpose() * &inst.p * &inst.b;
    let gap = (sigma * dk.transpose() * s * dk).trace();
    (gap / inst.j_star).max(0.0)
}

/// `-ln(1 + cost)`, the log-transformed negative stage cost.
pub fn transform_reward(cost: f64) -> f64 {
    -(1.0 + cost).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    /// Steps per trajectory.
    pub horizon: usize,
    /// Trajectories per oracle call.
    pub trajectories: usize,
    /// Initial state; zero when absent.
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    /// Apply the gain to running-whitened states instead of raw states.
    #[serde(default)]
    pub state_normalization: bool,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            horizon: 300,
            trajectories: 1,
            initial_state: None,
            state_normalization: false,
        }
    }
}

impl RolloutConfig {
    pub fn timesteps_per_call(&self) -> usize {
        self.horizon * self.trajectories
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.horizon == 0 || self.trajectories == 0 {
            return Err(Error::InvalidInput("rollout horizon and trajectory count must be positive".into()));
        }
        if let Some(x0) = &self.initial_state {
            Error::check_dim(n, x0.len())?;
        }
        Ok(())
    }
}

/// Symmetric square root factor `L` with `L L^T = W` for PSD `W`.
fn noise_factor(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = w.clone().symmetric_eigen();
    let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
}

/// Rollout oracle: mean transformed reward over `trajectories x horizon`
/// steps of the closed loop with Gaussian process noise.
pub struct LqrOracle<'a, R> {
    inst: &'a LqrInstance,
    cfg: RolloutConfig,
    noise: DMatrix<f64>,
    noiseless: bool,
    normalizer: WelfordState,
    pub rng: R,
    timesteps: u64,
}

impl<'a, R: Rng> LqrOracle<'a, R> {
    pub fn new(inst: &'a LqrInstance, cfg: RolloutConfig, rng: R) -> Result<Self> {
        cfg.validate(inst.state_dim())?;
        let noise = noise_factor(&inst.w);
        let noiseless = inst.w.iter().all(|v| *v == 0.0);
        Ok(Self {
            inst,
            noise,
            noiseless,
            normalizer: WelfordState::new(inst.state_dim()),
            cfg,
            rng,
            timesteps: 0,
        })
    }

    /// Environment steps simulated so far.
    pub fn timesteps(&self) -> u64 {
        self.timesteps
    }

    fn rollout(&mut self, gain: &DMatrix<f64>) -> f64 {
        let inst = self.inst;
        let n = inst.state_dim();
        let mut x = match &self.cfg.initial_state {
            Some(x0) => DVector::from_column_slice(x0),
            None => DVector::zeros(n),
        };
        let mut total = 0.0;
        let mut worst = 0.0f64;
        for t in 0..self.cfg.horizon {
            let u = if self.cfg.state_normalization {
                self.normalizer.update(x.as_slice());
                let (mean, _) = self.normalizer.finalize();
                let z = normalize_state(x.as_slice(), &mean, &self.normalizer.std());
                gain * DVector::from_vec(z)
            } else {
                gain * &x
            };
            let cost = x.dot(&(&inst.q * &x)) + u.dot(&(&inst.r * &u));
            let reward = transform_reward(cost);
            worst = worst.min(reward);
            total += reward;
            x = &inst.a * &x + &inst.b * &u;
            if !self.noiseless {
                let z = DVector::from_fn(n, |_, _| self.rng.sample::<f64, _>(StandardNormal));
                x += &self.noise * z;
            }
            if !(x.norm() <= OVERFLOW_NORM) {
                total += worst * (self.cfg.horizon - t - 1) as f64;
                break;
            }
        }
        total
    }
}

impl<'a, R: Rng> Oracle for LqrOracle<'a, R> {
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        let gain = PolicyGain::unflatten(theta, self.inst.input_dim(), self.inst.state_dim())?;
        let mut total = 0.0;
        for _ in 0..self.cfg.trajectories {
            total += self.rollout(&gain.0);
        }
        self.timesteps += self.cfg.timesteps_per_call() as u64;
        Ok(total / self.cfg.timesteps_per_call() as f64)
    }

    fn cost_per_call(&self) -> u64 {
        self.cfg.timesteps_per_call() as u64
    }
}

/// One oracle call with a fresh oracle.
pub fn lqr_oracle<R: Rng>(theta: &[f64], inst: &LqrInstance, cfg: &RolloutConfig, rng: R) -> Result<f64> {
    LqrOracle::new(inst, cfg.clone(), rng)?.evaluate(theta)
}
