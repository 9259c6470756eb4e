//! Augmented Random Search with reward-std scaling and top-b elitism.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{RunHistory, StepRecord};
use crate::oracle::Oracle;

/// Floor for the return standard deviation used to scale the step.
pub const RETURN_STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArsConfig {
    /// `alpha`
    pub stepsize: f64,
    /// `nu`, perturbation scale.
    pub perturbation: f64,
    /// `N`, directions per update.
    pub directions: usize,
    /// `b`, number of best directions used; 0 uses all of them.
    pub elite: usize,
    /// Whether the environment should whiten observed states; ignored by
    /// plain function oracles.
    #[serde(default)]
    pub state_normalization: bool,
}

impl ArsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stepsize > 0.0) || !(self.perturbation > 0.0) {
            return Err(Error::InvalidInput("ARS stepsize and perturbation must be positive".into()));
        }
        if self.directions == 0 {
            return Err(Error::InvalidInput("ARS needs at least one direction".into()));
        }
        if self.elite > self.directions {
            return Err(Error::InvalidInput(format!(
                "ARS elite count {} exceeds directions {}",
                self.elite, self.directions
            )));
        }
        Ok(())
    }

    pub fn used_directions(&self) -> usize {
        if self.elite == 0 {
            self.directions
        } else {
            self.elite
        }
    }

    pub fn evaluations_per_update(&self) -> usize {
        2 * self.directions
    }
}

/// Population standard deviation.
fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Combines antithetic returns into the ARS step.
///
/// `returns[k] = (y_plus, y_minus)` for `directions[k]`. Exposed separately
/// from the sampling so the arithmetic can be checked in isolation.
pub fn ars_step(theta: &[f64], directions: &[Vec<f64>], returns: &[(f64, f64)], cfg: &ArsConfig) -> Vec<f64> {
    let mut order: Vec<usize> = (0..directions.len()).collect();
    // stable: ties keep sampling order
    order.sort_by(|&a, &b| {
        let ma = returns[a].0.max(returns[a].1);
        let mb = returns[b].0.max(returns[b].1);
        mb.total_cmp(&ma)
    });
    let b = cfg.used_directions().min(directions.len());
    let used = &order[..b];
    let pooled: Vec<f64> = used.iter().flat_map(|&k| [returns[k].0, returns[k].1]).collect();
    let sigma = std_dev(&pooled).max(RETURN_STD_FLOOR);
    let scale = cfg.stepsize / (b as f64 * sigma);
    let mut next = theta.to_vec();
    for &k in used {
        let diff = returns[k].0 - returns[k].1;
        for (t, d) in next.iter_mut().zip(&directions[k]) {
            *t += scale * diff * d;
        }
    }
    next
}

/// One ARS update: `2 N` oracle calls recorded into `history`. Returns the
/// new parameters and the number of evaluations used.
pub fn ars_update<O, R>(
    theta: &[f64],
    oracle: &mut O,
    cfg: &ArsConfig,
    rng: &mut R,
    history: &mut RunHistory,
) -> Result<(Vec<f64>, usize)>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let d = theta.len();
    let directions: Vec<Vec<f64>> = (0..cfg.directions)
        .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut returns = Vec::with_capacity(cfg.directions);
    for delta in &directions {
        let plus: Vec<f64> = theta.iter().zip(delta).map(|(t, e)| t + cfg.perturbation * e).collect();
        let minus: Vec<f64> = theta.iter().zip(delta).map(|(t, e)| t - cfg.perturbation * e).collect();
        let yp = oracle.evaluate(&plus)?;
        history.push(plus, yp, theta.to_vec());
        let ym = oracle.evaluate(&minus)?;
        history.push(minus, ym, theta.to_vec());
        returns.push((yp, ym));
    }
    let next = ars_step(theta, &directions, &returns, cfg);
    history.steps.push(StepRecord {
        after_evaluations: history.len(),
        from: theta.to_vec(),
        to: next.clone(),
        lengthscales: None,
        degenerate: false,
    });
    Ok((next, 2 * cfg.directions))
}

/// Repeats [`ars_update`] while a full update fits in `budget` oracle calls.
pub fn run_ars<O, R>(oracle: &mut O, theta0: &[f64], budget: usize, cfg: &ArsConfig, rng: &mut R) -> Result<RunHistory>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let per = cfg.evaluations_per_update();
    if budget < per {
        return Err(Error::InvalidInput(format!(
            "budget {budget} is smaller than one ARS update ({per} evaluations)"
        )));
    }
    let mut history = RunHistory::new();
    let mut theta = theta0.to_vec();
    while history.len() + per <= budget {
        theta = ars_update(&theta, oracle, cfg, rng, &mut history)?.0;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FnOracle;
    use crate::rng::seeded;

    fn cfg(directions: usize, elite: usize) -> ArsConfig {
        ArsConfig {
            stepsize: 0.1,
            perturbation: 0.1,
            directions,
            elite,
            state_normalization: false,
        }
    }

    #[test]
    fn equal_returns_do_not_move() {
        let mut h = RunHistory::new();
        let mut o = FnOracle(|_: &[f64]| 3.0);
        let (next, used) = ars_update(&[0.2, -0.4], &mut o, &cfg(4, 2), &mut seeded(0), &mut h).unwrap();
        assert_eq!(next, vec![0.2, -0.4]);
        assert_eq!(used, 8);
        assert_eq!(h.len(), 8);
    }

    #[test]
    fn hand_computed_single_direction_step() {
        // sigma_R = std({1, 0}) = 0.5, step = 0.1 * (1 - 0) * 1 / (1 * 0.5)
        let next = ars_step(&[0.0], &[vec![1.0]], &[(1.0, 0.0)], &cfg(1, 1));
        assert!((next[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn elite_selection_uses_best_directions() {
        let dirs = vec![vec![1.0], vec![-1.0], vec![0.5]];
        let rets = [(0.0, 0.1), (5.0, 1.0), (0.2, 0.0)];
        // b = 1 keeps direction 1 only: sigma = 2, step = 0.1 * 4 * -1 / 2
        let next = ars_step(&[0.0], &dirs, &rets, &cfg(3, 1));
        assert!((next[0] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_shift_invariance() {
        let dirs = vec![vec![1.0, 0.3], vec![-0.2, 0.8]];
        let rets = [(1.0, 0.4), (0.3, 0.9)];
        let shifted: Vec<(f64, f64)> = rets.iter().map(|(a, b)| (a + 10.0, b + 10.0)).collect();
        let a = ars_step(&[0.0, 0.0], &dirs, &rets, &cfg(2, 0));
        let b = ars_step(&[0.0, 0.0], &dirs, &shifted, &cfg(2, 0));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_rounds_down_to_whole_updates() {
        let mut o = FnOracle(|x: &[f64]| -x[0] * x[0]);
        let h = run_ars(&mut o, &[1.0], 25, &cfg(3, 0), &mut seeded(2)).unwrap();
        assert_eq!(h.len(), 24);
        assert_eq!(h.steps.len(), 4);
    }

    #[test]
    fn invalid_elite_rejected() {
        assert!(cfg(2, 3).validate().is_err());
    }
}
