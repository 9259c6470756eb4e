//! Local policy search with Gaussian-process gradient models.
//!
//! The optimizer ([`optimizer`]) alternates between actively sampling points
//! that most reduce the uncertainty of the objective's gradient at the current
//! iterate ([`acquisition`]) and ascending the posterior-mean gradient.
//! Benchmarks live in [`synthetic`] (objectives sampled from a GP prior) and
//! [`lqr`] (linear quadratic regulator policy search); [`baselines`] holds
//! Augmented Random Search and expected-improvement BO for comparison.

pub mod acquisition;
pub mod baselines;
pub mod error;
pub mod gp;
pub mod history;
pub mod lqr;
pub mod optim;
pub mod optimizer;
pub mod oracle;
pub mod parallel;
pub mod rng;
pub mod runstats;
pub mod synthetic;

pub use error::{Error, Result};
