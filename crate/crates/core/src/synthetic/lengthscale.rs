//! Dimension-dependent lengthscales for the synthetic objectives.
//!
//! The mean distance between two uniform points in the unit hypercube has no
//! closed form; an upper bound on it, rescaled so that the 2-d value is 0.1,
//! sets the typical correlation length in each dimension.

use rand::Rng;

use crate::gp::ParamSpec;

/// Relative half-width of the lengthscale interval.
pub const GAMMA: f64 = 0.3;

fn line_picking_bound(d: f64) -> f64 {
    (d / 6.0).sqrt() * (1.0 / 3.0 + (1.0 + 2.0 * (1.0 - 3.0 / (5.0 * d)).sqrt())).sqrt()
}

/// Scaled hypercube line-picking bound; `delta_sub(2) == 0.1`.
///
/// # Panics
/// If `d == 0`.
pub fn delta_sub(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be positive");
    0.1 * line_picking_bound(d as f64) / line_picking_bound(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthscaleDistribution {
    pub dim: usize,
    pub gamma: f64,
}

impl LengthscaleDistribution {
    pub fn new(dim: usize) -> Self {
        Self { dim, gamma: GAMMA }
    }

    /// `[2 D (1 - gamma), 2 D (1 + gamma)]` with `D = delta_sub(dim)`.
    pub fn interval(&self) -> (f64, f64) {
        let c = 2.0 * delta_sub(self.dim);
        (c * (1.0 - self.gamma), c * (1.0 + self.gamma))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.interval();
        rng.random_range(lo..=hi)
    }

    /// The same interval as a uniform hyperprior.
    pub fn as_prior(&self) -> ParamSpec {
        let (low, high) = self.interval();
        ParamSpec::Uniform { low, high }
    }
}

pub fn sample_lengthscale<R: Rng + ?Sized>(d: usize, rng: &mut R) -> f64 {
    LengthscaleDistribution::new(d).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn two_dims_is_a_tenth() {
        assert!((delta_sub(2) - 0.1).abs() < 1e-15);
        let (lo, hi) = LengthscaleDistribution::new(2).interval();
        assert!((lo - 0.14).abs() < 1e-15 && (hi - 0.26).abs() < 1e-15);
    }

    #[test]
    fn monotone_in_dimension() {
        for d in 1..36 {
            assert!(delta_sub(d + 1) > delta_sub(d));
        }
    }

    #[test]
    fn draws_stay_in_interval() {
        let mut r = seeded(4);
        for _ in 0..1000 {
            let l = sample_lengthscale(2, &mut r);
            assert!((0.14..=0.26).contains(&l));
        }
    }
}
