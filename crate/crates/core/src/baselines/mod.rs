//! Comparison optimizers sharing the [`Oracle`](crate::oracle::Oracle) and
//! [`RunHistory`](crate::history::RunHistory) interfaces.

pub mod ars;
pub mod bo;

pub use ars::{ars_step, ars_update, run_ars, ArsConfig};
pub use bo::{expected_improvement, run_vanilla_bo, EiConfig};
