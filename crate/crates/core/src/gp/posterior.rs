//! GP conditioning on zeroth-order observations: the value posterior and the
//! joint posterior over the gradient at a query point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cholesky::CholeskyFactor;
use super::kernel::{KernelParams, JITTER_THRESHOLD};
use crate::error::{Error, Result};

/// Append-only list of observations `(theta_i, y_i)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(points: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        Error::check_dim(points.len(), targets.len())?;
        if let Some(first) = points.first() {
            for p in &points {
                Error::check_dim(first.len(), p.len())?;
            }
        }
        Ok(Self { points, targets })
    }

    pub fn push(&mut self, point: Vec<f64>, target: f64) -> Result<()> {
        if let Some(d) = self.dim() {
            Error::check_dim(d, point.len())?;
        }
        self.points.push(point);
        self.targets.push(target);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dimension of the stored points, `None` while empty.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// The most recent `k` observations in their original order.
    pub fn tail(&self, k: usize) -> Dataset {
        let start = self.len().saturating_sub(k);
        Dataset {
            points: self.points[start..].to_vec(),
            targets: self.targets[start..].to_vec(),
        }
    }

    /// Same inputs with replaced targets.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Dataset> {
        Dataset::from_parts(self.points.clone(), targets)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuePosterior {
    pub mean: f64,
    pub variance: f64,
}

/// Gaussian belief over the gradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianPosterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl JacobianPosterior {
    pub fn trace(&self) -> f64 {
        self.covariance.trace()
    }
}

/// `K(X, X) + noise I` for the given points.
pub fn kernel_matrix(points: &[Vec<f64>], params: &KernelParams, noise: f64) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = params.k(&points[i], &points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] = params.signal_variance + noise;
    }
    k
}

fn factor_with_noise(points: &[Vec<f64>], params: &KernelParams, noise: f64) -> Result<CholeskyFactor> {
    let mut f = CholeskyFactor::with_capacity(points.len());
    let mut cross = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        Error::check_dim(params.dim(), p.len())?;
        cross.clear();
        cross.extend(points[..i].iter().map(|q| params.k(q, p)));
        f.push(&cross, params.signal_variance + noise)?;
    }
    Ok(f)
}

/// Cholesky factor of `K(X, X) + noise I`, built by successive appends.
///
/// With (near) zero noise a failed factorization is retried once with the
/// jittered diagonal. Returns the factor and the diagonal noise actually used.
pub fn factor_points(points: &[Vec<f64>], params: &KernelParams) -> Result<(CholeskyFactor, f64)> {
    match factor_with_noise(points, params, params.noise_variance) {
        Ok(f) => Ok((f, params.noise_variance)),
        Err(Error::NotPositiveDefinite { .. }) if params.noise_variance < JITTER_THRESHOLD => {
            let noise = params.jittered_noise();
            factor_with_noise(points, params, noise).map(|f| (f, noise))
        }
        Err(e) => Err(e),
    }
}

/// A zero-mean GP conditioned on a dataset.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: KernelParams,
    data: Dataset,
    factor: CholeskyFactor,
    noise: f64,
    /// `(K + noise I)^{-1} y`
    alpha: Vec<f64>,
}

impl GpModel {
    pub fn fit(data: &Dataset, params: &KernelParams) -> Result<Self> {
        params.validate()?;
        let (factor, noise) = factor_points(data.points(), params)?;
        let alpha = factor.solve(data.targets())?;
        Ok(Self {
            params: params.clone(),
            data: data.clone(),
            factor,
            noise,
            alpha,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    /// Diagonal noise used in the factorization (including any fallback jitter).
    pub fn diagonal_noise(&self) -> f64 {
        self.noise
    }

    fn cross(&self, x: &[f64]) -> Vec<f64> {
        self.data.points().iter().map(|p| self.params.k(x, p)).collect()
    }

    pub fn value(&self, x: &[f64]) -> Result<ValuePosterior> {
        Error::check_dim(self.params.dim(), x.len())?;
        let kx = self.cross(x);
        let mean = kx.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = self.factor.solve_lower(&kx)?;
        let variance = (self.params.signal_variance - v.iter().map(|t| t * t).sum::<f64>()).max(0.0);
        Ok(ValuePosterior { mean, variance })
    }

    /// Posterior mean only; skips the triangular solve needed for the variance.
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.params.dim(), x.len())?;
        Ok(self
            .data
            .points()
            .iter()
            .zip(&self.alpha)
            .map(|(p, a)| self.params.k(x, p) * a)
            .sum())
    }

    /// Gradient of the posterior mean, `grad K(x, X) alpha`.
    pub fn mean_gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        let d = self.params.dim();
        Error::check_dim(d, x.len())?;
        let mut g = DVector::zeros(d);
        let mut buf = vec![0.0; d];
        for (p, a) in self.data.points().iter().zip(&self.alpha) {
            self.params.grad1_into(x, p, &mut buf);
            for (gi, bi) in g.iter_mut().zip(&buf) {
                *gi += bi * a;
            }
        }
        Ok(g)
    }

    /// `V = L^{-1} grad K(X, x)`, an `n x d` matrix; the gradient covariance is
    /// `prior - V^T V`.
    pub(crate) fn whitened_cross_gradient(&self, x: &[f64]) -> DMatrix<f64> {
        whitened_cross_gradient(&self.factor, self.data.points(), x, &self.params)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<JacobianPosterior> {
        let d = self.params.dim();
        Error::check_dim(d, x.len())?;
        let mean = self.mean_gradient(x)?;
        let v = self.whitened_cross_gradient(x);
        let mut covariance = self.params.precision_matrix() * self.params.signal_variance;
        covariance -= v.tr_mul(&v);
        Ok(JacobianPosterior { mean, covariance })
    }
}

/// Columns `j` of the result hold `L^{-1}` applied to `d k(x, X) / dx_j`.
pub(crate) fn whitened_cross_gradient(
    factor: &CholeskyFactor,
    points: &[Vec<f64>],
    x: &[f64],
    params: &KernelParams,
) -> DMatrix<f64> {
    let n = points.len();
    let d = params.dim();
    let mut g = DMatrix::zeros(n, d);
    let mut buf = vec![0.0; d];
    for (i, p) in points.iter().enumerate() {
        params.grad1_into(x, p, &mut buf);
        for j in 0..d {
            g[(i, j)] = buf[j];
        }
    }
    for mut col in g.column_iter_mut() {
        factor.solve_lower_in_place(col.as_mut_slice());
    }
    g
}

pub fn posterior_value(query: &[f64], data: &Dataset, params: &KernelParams) -> Result<ValuePosterior> {
    GpModel::fit(data, params)?.value(query)
}

pub fn posterior_jacobian(query: &[f64], data: &Dataset, params: &KernelParams) -> Result<JacobianPosterior> {
    GpModel::fit(data, params)?.jacobian(query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_data_gives_prior() {
        let p = KernelParams::new(vec![0.3, 0.6], 2.5, 0.01).unwrap();
        let data = Dataset::new();
        let v = posterior_value(&[0.1, 0.2], &data, &p).unwrap();
        assert_eq!(v.mean, 0.0);
        assert_eq!(v.variance, 2.5);
        let j = posterior_jacobian(&[0.1, 0.2], &data, &p).unwrap();
        assert_eq!(j.mean, DVector::zeros(2));
        assert_relative_eq!(j.covariance, p.precision_matrix() * 2.5, epsilon = 1e-15);
    }

    #[test]
    fn noiseless_interpolation_at_training_point() {
        let p = KernelParams::new(vec![0.5], 1.0, 0.0).unwrap();
        let data = Dataset::from_parts(vec![vec![0.3]], vec![1.7]).unwrap();
        let v = posterior_value(&[0.3], &data, &p).unwrap();
        assert!((v.mean - 1.7).abs() < 1e-10);
        assert!(v.variance < 1e-10);
    }

    #[test]
    fn dataset_rejects_mixed_dimensions() {
        let mut d = Dataset::new();
        d.push(vec![0.0, 1.0], 1.0).unwrap();
        assert!(d.push(vec![0.0], 1.0).is_err());
        assert!(Dataset::from_parts(vec![vec![1.0]], vec![]).is_err());
    }

    #[test]
    fn tail_keeps_order() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let d = Dataset::from_parts(pts, ys).unwrap();
        assert_eq!(d.tail(4).targets(), &[6.0, 7.0, 8.0, 9.0]);
        assert_eq!(d.tail(40).len(), 10);
    }
}
