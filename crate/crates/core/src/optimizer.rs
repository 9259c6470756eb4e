//! The GIBO outer/inner loop.
//!
//! Each iteration evaluates the objective at the current iterate, optionally
//! refits the GP hyperparameters on the local window, queries `M` points that
//! maximize gradient information at the iterate, and then takes a gradient
//! ascent step along the posterior-mean gradient.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{maximize_gi, GiContext, GiOptions};
use crate::error::{Error, Result};
use crate::gp::{fit_hyperparameters_map, Dataset, FitOptions, GpModel, Hyperpriors, KernelParams};
use crate::history::{RunHistory, StepRecord};
use crate::oracle::Oracle;

/// Below this Mahalanobis norm the gradient estimate is treated as zero.
pub const DEGENERATE_GRADIENT_NORM: f64 = 1e-12;

/// How the GP hyperparameters are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum HyperparameterPolicy {
    /// Known parameters, never refit.
    Fixed { params: KernelParams },
    /// MAP refit on the local window once per outer iteration.
    Map { priors: Hyperpriors },
}

#[derive(Debug, Clone)]
pub struct GiboConfig {
    /// `eta`
    pub stepsize: f64,
    /// `M`, acquisition-chosen samples per gradient estimate.
    pub samples_per_step: usize,
    /// `N_m`, number of most recent points in the local GP.
    pub window: usize,
    /// `delta_b`, half-width of the acquisition box around the iterate.
    pub bound: f64,
    pub normalize_gradient: bool,
    pub hyperparameters: HyperparameterPolicy,
    pub acquisition: GiOptions,
    pub fit: FitOptions,
}

impl GiboConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stepsize > 0.0) || !self.stepsize.is_finite() {
            return Err(Error::InvalidInput(format!("stepsize must be positive, got {}", self.stepsize)));
        }
        if self.samples_per_step == 0 {
            return Err(Error::InvalidInput("samples_per_step must be at least 1".into()));
        }
        if self.window < self.samples_per_step + 1 {
            return Err(Error::InvalidInput(format!(
                "window ({}) must be at least samples_per_step + 1 ({})",
                self.window,
                self.samples_per_step + 1
            )));
        }
        if !(self.bound > 0.0) || !self.bound.is_finite() {
            return Err(Error::InvalidInput(format!("bound must be positive, got {}", self.bound)));
        }
        match &self.hyperparameters {
            HyperparameterPolicy::Fixed { params } => params.validate(),
            HyperparameterPolicy::Map { priors } => priors.validate(),
        }
    }

    /// Oracle calls per outer iteration, `M + 1`.
    pub fn evaluations_per_iteration(&self) -> usize {
        self.samples_per_step + 1
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub iterate: Vec<f64>,
    pub data: Dataset,
    pub iterations: usize,
    pub params: KernelParams,
}

impl OptimizerState {
    pub fn new(theta0: &[f64], config: &GiboConfig) -> Result<Self> {
        config.validate()?;
        if theta0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("initial point must be finite".into()));
        }
        let params = match &config.hyperparameters {
            HyperparameterPolicy::Fixed { params } => params.clone(),
            HyperparameterPolicy::Map { priors } => priors.prior_mode(theta0.len())?,
        };
        Error::check_dim(params.dim(), theta0.len())?;
        Ok(Self {
            iterate: theta0.to_vec(),
            data: Dataset::new(),
            iterations: 0,
            params,
        })
    }

    pub fn evaluations(&self) -> usize {
        self.data.len()
    }
}

/// Update direction `g / ||g||_L` with `||x||_L = sqrt(x^T diag(1/l^2) x)`.
pub fn normalize_gradient(gradient: &[f64], lengthscales: &[f64]) -> Result<Vec<f64>> {
    Error::check_dim(lengthscales.len(), gradient.len())?;
    let norm = gradient
        .iter()
        .zip(lengthscales)
        .map(|(g, l)| (g / l).powi(2))
        .sum::<f64>()
        .sqrt();
    if !(norm >= DEGENERATE_GRADIENT_NORM) {
        return Err(Error::DegenerateGradient(norm));
    }
    Ok(gradient.iter().map(|g| g / norm).collect())
}

/// The most recent `window` observations.
pub fn select_local_window(data: &Dataset, window: usize) -> Dataset {
    data.tail(window)
}

fn observe<O: Oracle + ?Sized>(
    state: &mut OptimizerState,
    oracle: &mut O,
    point: Vec<f64>,
    history: &mut RunHistory,
) -> Result<()> {
    let y = oracle.evaluate(&point)?;
    if !y.is_finite() {
        return Err(Error::Oracle(format!("non-finite observation {y}")));
    }
    history.push(point.clone(), y, state.iterate.clone());
    state.data.push(point, y)
}

/// One outer iteration: `M + 1` oracle calls followed by a parameter update.
pub fn gibo_iteration<O, R>(
    state: &mut OptimizerState,
    oracle: &mut O,
    config: &GiboConfig,
    rng: &mut R,
    history: &mut RunHistory,
) -> Result<()>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    let anchor = state.iterate.clone();
    observe(state, oracle, anchor.clone(), history)?;

    if let HyperparameterPolicy::Map { priors } = &config.hyperparameters {
        let window = select_local_window(&state.data, config.window);
        let seed: u64 = rng.random();
        if window.len() >= 2 {
            let fit = FitOptions { seed, ..config.fit };
            match fit_hyperparameters_map(&window, priors, Some(&state.params), &fit) {
                Ok(r) => state.params = r.params,
                Err(e) => log::warn!("hyperparameter refit failed, keeping previous values: {e}"),
            }
        }
    }

    for _ in 0..config.samples_per_step {
        let window = select_local_window(&state.data, config.window);
        let ctx = GiContext::new(&anchor, window.points(), &state.params, config.bound)?;
        let query = maximize_gi(&ctx, &config.acquisition, rng)?;
        observe(state, oracle, query, history)?;
    }

    let window = select_local_window(&state.data, config.window);
    let model = GpModel::fit(&window, &state.params)?;
    let gradient: DVector<f64> = model.mean_gradient(&anchor)?;

    let (next, degenerate) = if config.normalize_gradient {
        match normalize_gradient(gradient.as_slice(), &state.params.lengthscales) {
            Ok(dir) => (
                anchor.iter().zip(&dir).map(|(t, d)| t + config.stepsize * d).collect(),
                false,
            ),
            Err(Error::DegenerateGradient(_)) => (anchor.clone(), true),
            Err(e) => return Err(e),
        }
    } else {
        (
            anchor.iter().zip(gradient.iter()).map(|(t, g)| t + config.stepsize * g).collect(),
            false,
        )
    };
    history.steps.push(StepRecord {
        after_evaluations: state.data.len(),
        from: anchor,
        to: next.clone(),
        lengthscales: config.normalize_gradient.then(|| state.params.lengthscales.clone()),
        degenerate,
    });
    state.iterate = next;
    state.iterations += 1;
    Ok(())
}

/// Runs GIBO from `theta0` until another iteration would exceed `budget`
/// oracle calls.
pub fn run_gibo<O, R>(oracle: &mut O, theta0: &[f64], config: &GiboConfig, budget: usize, rng: &mut R) -> Result<RunHistory>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    let mut state = OptimizerState::new(theta0, config)?;
    let per_iter = config.evaluations_per_iteration();
    if budget < per_iter {
        return Err(Error::InvalidInput(format!(
            "budget {budget} is smaller than one iteration ({per_iter} evaluations)"
        )));
    }
    let mut history = RunHistory::new();
    while state.evaluations() + per_iter <= budget {
        gibo_iteration(&mut state, oracle, config, rng, &mut history)?;
    }
    Ok(history)
}
