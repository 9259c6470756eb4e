//! Gaussian-process machinery: SE kernel and derivatives, incremental
//! Cholesky factorization, value and gradient posteriors, MAP fitting.

pub mod cholesky;
pub mod hyperfit;
pub mod kernel;
pub mod posterior;

pub use cholesky::CholeskyFactor;
pub use hyperfit::{fit_hyperparameters_map, log_marginal_likelihood, FitOptions, FitResult, Hyperpriors, ParamSpec};
pub use kernel::{se_kernel, se_kernel_grad1, se_kernel_hess12, KernelParams};
pub use posterior::{
    factor_points, kernel_matrix, posterior_jacobian, posterior_value, Dataset, GpModel, JacobianPosterior,
    ValuePosterior,
};
