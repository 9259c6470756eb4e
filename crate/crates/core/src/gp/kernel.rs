//! Squared-exponential kernel with per-dimension lengthscales and its
//! derivatives with respect to the inputs.
//!
//! `k(x1, x2) = sf2 * exp(-0.5 * (x1 - x2)^T L (x1 - x2))` with
//! `L = diag(1 / l_i^2)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise variances below this level get a relative jitter on the kernel diagonal.
pub const JITTER_THRESHOLD: f64 = 1e-8;

/// Hyperparameters of a zero-mean GP with SE kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let p = Self {
            lengthscales,
            signal_variance,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same lengthscale in every one of `dim` dimensions.
    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        Self::new(vec![lengthscale; dim], signal_variance, noise_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(Error::InvalidInput("kernel needs at least one lengthscale".into()));
        }
        if let Some(l) = self.lengthscales.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput(format!("lengthscale must be positive, got {l}")));
        }
        if !(self.signal_variance > 0.0) || !self.signal_variance.is_finite() {
            return Err(Error::InvalidInput(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Diagonal of the lengthscale matrix `L`.
    pub fn precision_diag(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.lengthscales.iter().map(|l| 1.0 / (l * l)))
    }

    /// The full lengthscale matrix `L = diag(1/l^2)`.
    pub fn precision_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.precision_diag())
    }

    /// Noise with the fallback jitter added, used when factorizing with the
    /// plain noise variance fails.
    pub fn jittered_noise(&self) -> f64 {
        if self.noise_variance < JITTER_THRESHOLD {
            self.noise_variance + 1e-8 * self.signal_variance
        } else {
            self.noise_variance
        }
    }

    /// `(x1 - x2)^T L (x1 - x2)` without dimension checks.
    pub(crate) fn scaled_sq_dist(&self, x1: &[f64], x2: &[f64]) -> f64 {
        x1.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let r = (a - b) / l;
                r * r
            })
            .sum()
    }

    /// Kernel value without dimension checks.
    pub(crate) fn k(&self, x1: &[f64], x2: &[f64]) -> f64 {
        self.signal_variance * (-0.5 * self.scaled_sq_dist(x1, x2)).exp()
    }

    /// `-L (x1 - x2) k(x1, x2)` written into `out`, without dimension checks.
    pub(crate) fn grad1_into(&self, x1: &[f64], x2: &[f64], out: &mut [f64]) -> f64 {
        let k = self.k(x1, x2);
        for (i, o) in out.iter_mut().enumerate() {
            let l = self.lengthscales[i];
            *o = -(x1[i] - x2[i]) / (l * l) * k;
        }
        k
    }

    fn check(&self, x1: &[f64], x2: &[f64]) -> Result<()> {
        Error::check_dim(self.dim(), x1.len())?;
        Error::check_dim(self.dim(), x2.len())
    }
}

pub fn se_kernel(x1: &[f64], x2: &[f64], params: &KernelParams) -> Result<f64> {
    params.check(x1, x2)?;
    Ok(params.k(x1, x2))
}

/// Gradient of the kernel with respect to its first argument.
///
/// The gradient with respect to the second argument is the negation.
pub fn se_kernel_grad1(x1: &[f64], x2: &[f64], params: &KernelParams) -> Result<DVector<f64>> {
    params.check(x1, x2)?;
    let mut g = DVector::zeros(params.dim());
    params.grad1_into(x1, x2, g.as_mut_slice());
    Ok(g)
}

/// Mixed second derivative `d^2 k / (dx1 dx2) = L (I - r r^T L) k` with `r = x1 - x2`.
///
/// At `x1 == x2` this is `L * sf2`, the prior covariance of the gradient.
pub fn se_kernel_hess12(x1: &[f64], x2: &[f64], params: &KernelParams) -> Result<DMatrix<f64>> {
    params.check(x1, x2)?;
    let d = params.dim();
    let k = params.k(x1, x2);
    let prec = params.precision_diag();
    // L r
    let lr: Vec<f64> = (0..d).map(|i| prec[i] * (x1[i] - x2[i])).collect();
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { prec[i] } else { 0.0 };
        (delta - lr[i] * lr[j]) * k
    }))
}
