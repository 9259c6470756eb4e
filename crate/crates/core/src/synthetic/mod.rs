//! Within-model synthetic benchmark: objectives sampled from a GP prior on
//! the unit cube, their approximate global maxima, and normalized regret.

pub mod lengthscale;
pub mod objective;
pub mod regret;
pub mod sobol;

pub use lengthscale::{delta_sub, sample_lengthscale, LengthscaleDistribution};
pub use objective::{approx_global_max, evaluate_noisy, generate_objective, SyntheticObjective, SyntheticOracle};
pub use regret::{normalized_regret, regret_of, BestGuess};
pub use sobol::Sobol;
