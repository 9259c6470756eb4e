//! The zeroth-order oracle contract shared by every optimizer and benchmark.

use crate::error::{Error, Result};

/// Noisy objective `y = J(theta) + noise`, maximized by all optimizers.
pub trait Oracle {
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64>;

    /// Budget units consumed by one call (1 for plain function evaluations,
    /// rollout timesteps for control tasks).
    fn cost_per_call(&self) -> u64 {
        1
    }
}

/// Adapts an infallible closure.
pub struct FnOracle<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> Oracle for FnOracle<F> {
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        let y = (self.0)(theta);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Oracle(format!("non-finite observation {y}")))
        }
    }
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        (**self).evaluate(theta)
    }

    fn cost_per_call(&self) -> u64 {
        (**self).cost_per_call()
    }
}
