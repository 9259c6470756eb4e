//! Global Bayesian optimization with Expected Improvement.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::gp::{fit_hyperparameters_map, Dataset, FitOptions, GpModel, KernelParams};
use crate::history::RunHistory;
use crate::optim::{self, AscentOptions, Bounds};
use crate::optimizer::HyperparameterPolicy;
use crate::oracle::Oracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EiConfig {
    /// `xi`, exploration offset.
    #[serde(default)]
    pub xi: f64,
    /// Local ascents per query.
    pub restarts: usize,
    /// Uniform candidates scored before picking ascent starts.
    pub raw_samples: usize,
    /// Evaluations between MAP refits (when hyperparameters are fitted).
    pub refit_every: usize,
    pub max_iter: usize,
}

impl Default for EiConfig {
    fn default() -> Self {
        Self {
            xi: 0.0,
            restarts: 5,
            raw_samples: 256,
            refit_every: 5,
            max_iter: 50,
        }
    }
}

impl EiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0) {
            return Err(Error::InvalidInput(format!("EI offset must be non-negative, got {}", self.xi)));
        }
        if self.restarts == 0 || self.refit_every == 0 {
            return Err(Error::InvalidInput("EI restarts and refit cadence must be positive".into()));
        }
        Ok(())
    }
}

/// Closed-form EI for a Gaussian predictive `N(mean, std^2)`.
pub fn expected_improvement(mean: f64, std: f64, best: f64, xi: f64) -> f64 {
    let imp = mean - best - xi;
    if std <= 0.0 {
        return imp.max(0.0);
    }
    let z = imp / std;
    let n = Normal::standard();
    (imp * n.cdf(z) + std * n.pdf(z)).max(0.0)
}

fn uniform_in<R: Rng + ?Sized>(bounds: &Bounds, rng: &mut R) -> Vec<f64> {
    bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(lo, hi)| rng.random_range(*lo..=*hi))
        .collect()
}

/// Maximizes EI over `bounds` given a fitted model and incumbent `best`.
///
/// With no data EI is constant, so the first raw candidate is returned.
fn next_query<R: Rng + ?Sized>(
    model: Option<&GpModel>,
    best: f64,
    bounds: &Bounds,
    cfg: &EiConfig,
    rng: &mut R,
) -> Vec<f64> {
    let raw: Vec<Vec<f64>> = (0..cfg.raw_samples.max(cfg.restarts))
        .map(|_| uniform_in(bounds, rng))
        .collect();
    let Some(model) = model else {
        return raw[0].clone();
    };
    let ei = |x: &[f64]| match model.value(x) {
        Ok(p) => expected_improvement(p.mean, p.variance.max(0.0).sqrt(), best, cfg.xi),
        Err(_) => f64::NEG_INFINITY,
    };
    let mut scored: Vec<(usize, f64)> = raw.iter().enumerate().map(|(i, x)| (i, ei(x))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut starts: Vec<Vec<f64>> = scored.iter().take(cfg.restarts).map(|(i, _)| raw[*i].clone()).collect();
    // the incumbent is a cheap extra start when EI is flat almost everywhere
    if let Some((i, _)) = model
        .data()
        .targets()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
    {
        let mut p = model.data().points()[i].clone();
        bounds.clamp(&mut p);
        starts.push(p);
    }

    let width = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(l, u)| u - l)
        .fold(f64::INFINITY, f64::min);
    let step = 1e-6 * width.max(1e-3);
    let opts = AscentOptions {
        max_iter: cfg.max_iter,
        ..AscentOptions::default()
    };
    let mut best_x = raw[scored[0].0].clone();
    let mut best_v = scored[0].1;
    for s in &starts {
        let objective = |x: &[f64]| {
            let fx = ei(x);
            let mut f = |y: &[f64]| ei(y);
            (fx, optim::forward_difference(&mut f, x, fx, bounds, step))
        };
        let r = optim::maximize(objective, s, bounds, &opts);
        if r.value > best_v {
            best_v = r.value;
            best_x = r.x;
        }
    }
    bounds.clamp(&mut best_x);
    best_x
}

/// Classic BO loop over the box `bounds`, one oracle call per iteration.
///
/// If `theta0` is given it is the first query; otherwise the first query is
/// the (seeded) maximizer of the constant prior EI. Hyperparameters are
/// either fixed or MAP-refit on all data every `refit_every` evaluations.
pub fn run_vanilla_bo<O, R>(
    oracle: &mut O,
    theta0: Option<&[f64]>,
    bounds: &Bounds,
    budget: usize,
    hyperparameters: &HyperparameterPolicy,
    cfg: &EiConfig,
    fit: &FitOptions,
    rng: &mut R,
) -> Result<RunHistory>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be at least 1".into()));
    }
    let d = bounds.dim();
    let mut params: KernelParams = match hyperparameters {
        HyperparameterPolicy::Fixed { params } => params.clone(),
        HyperparameterPolicy::Map { priors } => priors.prior_mode(d)?,
    };
    Error::check_dim(params.dim(), d)?;

    let mut data = Dataset::new();
    let mut history = RunHistory::new();
    while history.len() < budget {
        let query = if data.is_empty() && theta0.is_some() {
            let t = theta0.unwrap();
            Error::check_dim(d, t.len())?;
            t.to_vec()
        } else if data.is_empty() {
            next_query(None, f64::NEG_INFINITY, bounds, cfg, rng)
        } else {
            if let HyperparameterPolicy::Map { priors } = hyperparameters {
                let seed: u64 = rng.random();
                if data.len() >= 2 && data.len() % cfg.refit_every == 0 {
                    let f = FitOptions { seed, ..*fit };
                    match fit_hyperparameters_map(&data, priors, Some(&params), &f) {
                        Ok(r) => params = r.params,
                        Err(e) => log::warn!("BO refit failed, keeping previous values: {e}"),
                    }
                }
            }
            let model = GpModel::fit(&data, &params)?;
            let best = data.targets().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            next_query(Some(&model), best, bounds, cfg, rng)
        };
        let y = oracle.evaluate(&query)?;
        history.push(query.clone(), y, query.clone());
        data.push(query, y)?;
    }
    Ok(history)
}
