//! Normalized regret of an optimizer's best guesses.

use serde::{Deserialize, Serialize};

use super::objective::SyntheticObjective;
use crate::error::{Error, Result};
use crate::history::RunHistory;

/// How the best guess after `k` evaluations is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestGuess {
    /// Sampled point with the highest noiseless value (earliest on ties).
    #[default]
    TrueValue,
    /// Sampled point with the highest observed (noisy) value.
    Observed,
}

/// `(f* - J(x)) / (f* - J(x0))` with `x0` the cube center.
pub fn regret_of(obj: &SyntheticObjective, x: &[f64]) -> Result<f64> {
    let denom = obj.f_star - obj.value(&obj.start());
    if !(denom > 1e-12) {
        return Err(Error::DegenerateNormalization(denom));
    }
    Ok((obj.f_star - obj.value(x)) / denom)
}

/// Regret after each evaluation of `history`.
pub fn normalized_regret(obj: &SyntheticObjective, history: &RunHistory, mode: BestGuess) -> Result<Vec<f64>> {
    if history.is_empty() {
        return Err(Error::InvalidInput("empty history".into()));
    }
    let j0 = obj.value(&obj.start());
    let denom = obj.f_star - j0;
    if !(denom > 1e-12) {
        return Err(Error::DegenerateNormalization(denom));
    }
    let mut out = Vec::with_capacity(history.len());
    match mode {
        BestGuess::TrueValue => {
            let mut best = f64::NEG_INFINITY;
            for r in &history.records {
                best = best.max(obj.value(&r.point));
                out.push((obj.f_star - best) / denom);
            }
        }
        BestGuess::Observed => {
            for r in &history.records {
                out.push((obj.f_star - obj.value(&r.best_point)) / denom);
            }
        }
    }
    Ok(out)
}
