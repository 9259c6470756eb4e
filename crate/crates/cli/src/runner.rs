//! Trial orchestration: objectives/instances, optimizer runs, scoring and
//! result rows.

use std::path::Path;
use std::time::Instant;

use gibo_core::baselines::run_ars;
use gibo_core::baselines::run_vanilla_bo;
use gibo_core::history::RunHistory;
use gibo_core::lqr::{is_stabilizing, paper_instance, relative_error, LqrInstance, LqrOracle, PolicyGain};
use gibo_core::optim::Bounds;
use gibo_core::optimizer::{run_gibo, GiboConfig, HyperparameterPolicy};
use gibo_core::oracle::Oracle;
use gibo_core::rng::{derive_seed, seeded};
use gibo_core::synthetic::{generate_objective, normalized_regret, BestGuess, SyntheticObjective, SyntheticOracle};
use serde::{Deserialize, Serialize};

use crate::config::{BestGuessMode, ExperimentConfig, ExperimentKind, OptimizerSpec, ResolvedOptimizer};
use crate::error::CliError;
use crate::stats::summarize;

/// One oracle call of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub optimizer: String,
    pub dimension: usize,
    pub trial: usize,
    /// Evaluations (synthetic) or timesteps (LQR) consumed including this call.
    pub index: u64,
    pub y: f64,
    pub best_y: f64,
    /// Normalized regret (synthetic) or relative error of the current gain (LQR).
    pub metric: f64,
    /// LQR only: whether the current gain stabilizes the system.
    pub stable: Option<bool>,
    pub wall_clock: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub optimizer: String,
    pub dimension: usize,
    pub trials: usize,
    pub failed: usize,
    pub mean_final: f64,
    pub median_final: f64,
    pub std_final: f64,
    pub p02_final: f64,
    pub p25_final: f64,
    pub p75_final: f64,
    pub p98_final: f64,
    /// LQR: fraction of trials whose final gain is stabilizing.
    pub stable_fraction: Option<f64>,
    /// LQR: median first index with a stabilizing gain (`inf` if never).
    pub median_first_stable: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub optimizer: String,
    pub dimension: usize,
    pub trial: usize,
    pub message: String,
}

/// A finished (or failed) run of one optimizer on one trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub optimizer: String,
    pub dimension: usize,
    pub trial: usize,
    pub rows: Vec<ResultRow>,
    pub history: RunHistory,
    pub error: Option<String>,
}

impl TrialOutcome {
    pub fn final_metric(&self) -> Option<f64> {
        self.rows.last().map(|r| r.metric)
    }

    /// First index at which the current gain is stabilizing.
    pub fn first_stable(&self) -> Option<u64> {
        self.rows.iter().find(|r| r.stable == Some(true)).map(|r| r.index)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub outcomes: Vec<TrialOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.outcomes.iter().flat_map(|o| o.rows.iter())
    }

    pub fn failures(&self) -> Vec<TrialFailure> {
        self.outcomes
            .iter()
            .filter_map(|o| {
                o.error.as_ref().map(|m| TrialFailure {
                    optimizer: o.optimizer.clone(),
                    dimension: o.dimension,
                    trial: o.trial,
                    message: m.clone(),
                })
            })
            .collect()
    }

    pub fn outcomes_for<'a>(&'a self, optimizer: &'a str, dimension: usize) -> impl Iterator<Item = &'a TrialOutcome> + 'a {
        self.outcomes
            .iter()
            .filter(move |o| o.optimizer == optimizer && o.dimension == dimension && o.error.is_none())
    }
}

/// Records the wall-clock time of every oracle call.
struct Timed<O> {
    inner: O,
    start: Instant,
    enabled: bool,
    times: Vec<f64>,
}

impl<O: Oracle> Oracle for Timed<O> {
    fn evaluate(&mut self, theta: &[f64]) -> gibo_core::Result<f64> {
        let y = self.inner.evaluate(theta)?;
        self.times.push(if self.enabled { self.start.elapsed().as_secs_f64() } else { 0.0 });
        Ok(y)
    }

    fn cost_per_call(&self) -> u64 {
        self.inner.cost_per_call()
    }
}

enum Problem {
    Synthetic(SyntheticObjective),
    Lqr(LqrInstance),
}

fn run_optimizer<O: Oracle>(
    oracle: &mut O,
    resolved: &ResolvedOptimizer,
    problem: &Problem,
    kind: ExperimentKind,
    calls: usize,
    seed: u64,
) -> gibo_core::Result<RunHistory> {
    let mut rng = seeded(seed);
    let (theta0, dim) = match problem {
        Problem::Synthetic(obj) => (obj.start(), obj.dim),
        Problem::Lqr(inst) => (vec![0.0; inst.gain_len()], inst.gain_len()),
    };
    match resolved {
        ResolvedOptimizer::Gibo(cfg) => {
            let cfg = match (kind, problem) {
                (ExperimentKind::SyntheticWithin, Problem::Synthetic(obj)) => GiboConfig {
                    hyperparameters: HyperparameterPolicy::Fixed { params: obj.params.clone() },
                    ..cfg.clone()
                },
                _ => cfg.clone(),
            };
            run_gibo(oracle, &theta0, &cfg, calls, &mut rng)
        }
        ResolvedOptimizer::Ars(cfg) => run_ars(oracle, &theta0, calls, cfg, &mut rng),
        ResolvedOptimizer::Bo(cfg) => {
            let Problem::Synthetic(obj) = problem else {
                return Err(gibo_core::Error::InvalidInput("vanilla BO is synthetic-only".into()));
            };
            let hyper = match kind {
                ExperimentKind::SyntheticWithin => HyperparameterPolicy::Fixed { params: obj.params.clone() },
                _ => HyperparameterPolicy::Map {
                    priors: crate::config::out_of_model_priors(dim),
                },
            };
            let bounds = Bounds::new(vec![0.0; dim], vec![1.0; dim]);
            run_vanilla_bo(oracle, Some(&theta0), &bounds, calls, &hyper, cfg, &Default::default(), &mut rng)
        }
    }
}

fn score(
    cfg: &ExperimentConfig,
    problem: &Problem,
    optimizer: &str,
    dimension: usize,
    trial: usize,
    history: &RunHistory,
    times: &[f64],
) -> gibo_core::Result<Vec<ResultRow>> {
    if history.is_empty() {
        return Ok(vec![]);
    }
    let row = |i: usize, metric: f64, stable: Option<bool>, index: u64| {
        let r = &history.records[i];
        ResultRow {
            experiment: cfg.name.clone(),
            optimizer: optimizer.to_string(),
            dimension,
            trial,
            index,
            y: r.y,
            best_y: r.best_y,
            metric,
            stable,
            wall_clock: times.get(i).copied().unwrap_or(0.0),
        }
    };
    match problem {
        Problem::Synthetic(obj) => {
            let mode = match cfg.best_guess {
                BestGuessMode::TrueValue => BestGuess::TrueValue,
                BestGuessMode::Observed => BestGuess::Observed,
            };
            let regret = normalized_regret(obj, history, mode)?;
            Ok(regret.iter().enumerate().map(|(i, m)| row(i, *m, None, i as u64 + 1)).collect())
        }
        Problem::Lqr(inst) => {
            let per_call = cfg.rollout().timesteps_per_call() as u64;
            let mut cache: Option<(Vec<f64>, f64, bool)> = None;
            let mut rows = Vec::with_capacity(history.len());
            for (i, r) in history.records.iter().enumerate() {
                let (err, stable) = match &cache {
                    Some((theta, e, s)) if *theta == r.iterate => (*e, *s),
                    _ => {
                        let gain = PolicyGain::unflatten(&r.iterate, inst.input_dim(), inst.state_dim())?;
                        let e = relative_error(&gain, inst);
                        let s = is_stabilizing(&r.iterate, inst);
                        cache = Some((r.iterate.clone(), e, s));
                        (e, s)
                    }
                };
                rows.push(row(i, err, Some(stable), (i as u64 + 1) * per_call));
            }
            Ok(rows)
        }
    }
}

/// Runs every optimizer on one `(dimension, trial)` problem.
fn run_trial(cfg: &ExperimentConfig, dimension: usize, trial: usize) -> Vec<TrialOutcome> {
    let master = cfg.seed;
    let problem = match cfg.kind {
        ExperimentKind::Lqr => Ok(Problem::Lqr(paper_instance())),
        _ => generate_objective(dimension, derive_seed(master, &[0, dimension as u64, trial as u64])).map(Problem::Synthetic),
    };
    let calls = cfg.calls();
    cfg.optimizers
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let name = spec.name();
            let fail = |message: String| TrialOutcome {
                optimizer: name.clone(),
                dimension,
                trial,
                rows: vec![],
                history: RunHistory::new(),
                error: Some(message),
            };
            let problem = match &problem {
                Ok(p) => p,
                Err(e) => return fail(format!("problem generation failed: {e}")),
            };
            let resolved = match cfg.resolve(spec, dimension) {
                Ok(r) => r,
                Err(m) => return fail(m),
            };
            let path = [dimension as u64, trial as u64, k as u64];
            let algo_seed = derive_seed(master, &[1, path[0], path[1], path[2]]);
            let noise_seed = derive_seed(master, &[2, path[0], path[1], path[2]]);
            let start = Instant::now();
            let result = match problem {
                Problem::Synthetic(obj) => {
                    let mut oracle = Timed {
                        inner: SyntheticOracle { objective: obj, rng: seeded(noise_seed) },
                        start,
                        enabled: cfg.timing,
                        times: vec![],
                    };
                    run_optimizer(&mut oracle, &resolved, problem, cfg.kind, calls, algo_seed).map(|h| (h, oracle.times))
                }
                Problem::Lqr(inst) => match LqrOracle::new(inst, cfg.rollout(), seeded(noise_seed)) {
                    Ok(inner) => {
                        let mut oracle = Timed {
                            inner,
                            start,
                            enabled: cfg.timing,
                            times: vec![],
                        };
                        run_optimizer(&mut oracle, &resolved, problem, cfg.kind, calls, algo_seed).map(|h| (h, oracle.times))
                    }
                    Err(e) => Err(e),
                },
            };
            match result.and_then(|(h, times)| score(cfg, problem, &name, dimension, trial, &h, &times).map(|rows| (h, rows))) {
                Ok((history, rows)) => TrialOutcome {
                    optimizer: name.clone(),
                    dimension,
                    trial,
                    rows,
                    history,
                    error: None,
                },
                Err(e) => fail(e.to_string()),
            }
        })
        .collect()
}

fn summarize_outcomes(cfg: &ExperimentConfig, outcomes: &[TrialOutcome]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for d in cfg.sweep_dimensions() {
        for spec in &cfg.optimizers {
            let name = spec.name();
            let group: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.optimizer == name && o.dimension == d).collect();
            let ok: Vec<&TrialOutcome> = group.iter().copied().filter(|o| o.error.is_none() && !o.rows.is_empty()).collect();
            let finals: Vec<f64> = ok.iter().filter_map(|o| o.final_metric()).collect();
            let s = if finals.is_empty() { None } else { Some(summarize(&finals)) };
            let (stable_fraction, median_first_stable) = if cfg.kind == ExperimentKind::Lqr && !ok.is_empty() {
                let stable = ok.iter().filter(|o| o.rows.last().and_then(|r| r.stable) == Some(true)).count();
                let firsts: Vec<f64> = ok
                    .iter()
                    .map(|o| o.first_stable().map_or(f64::INFINITY, |t| t as f64))
                    .collect();
                (Some(stable as f64 / ok.len() as f64), Some(summarize(&firsts).median))
            } else {
                (None, None)
            };
            let nan = f64::NAN;
            out.push(SummaryRow {
                experiment: cfg.name.clone(),
                optimizer: name,
                dimension: d,
                trials: group.len(),
                failed: group.len() - ok.len(),
                mean_final: s.map_or(nan, |s| s.mean),
                median_final: s.map_or(nan, |s| s.median),
                std_final: s.map_or(nan, |s| s.std),
                p02_final: s.map_or(nan, |s| s.p02),
                p25_final: s.map_or(nan, |s| s.p25),
                p75_final: s.map_or(nan, |s| s.p75),
                p98_final: s.map_or(nan, |s| s.p98),
                stable_fraction,
                median_first_stable,
            });
        }
    }
    out
}

/// Runs all `(dimension, trial, optimizer)` combinations, `workers` trials at
/// a time. Results are ordered by dimension, then trial, then optimizer,
/// independent of completion order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, CliError> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .sweep_dimensions()
        .into_iter()
        .flat_map(|d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();
    let outcomes = execute(cfg, &jobs)?;
    let summary = summarize_outcomes(cfg, &outcomes);
    Ok(ExperimentResult { outcomes, summary })
}

#[cfg(feature = "parallel")]
fn execute(cfg: &ExperimentConfig, jobs: &[(usize, usize)]) -> Result<Vec<TrialOutcome>, CliError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config {
            path: "workers".into(),
            message: e.to_string(),
        })?;
    let nested: Vec<Vec<TrialOutcome>> =
        pool.install(|| jobs.par_iter().map(|&(d, t)| run_trial(cfg, d, t)).collect());
    Ok(nested.into_iter().flatten().collect())
}

#[cfg(not(feature = "parallel"))]
fn execute(cfg: &ExperimentConfig, jobs: &[(usize, usize)]) -> Result<Vec<TrialOutcome>, CliError> {
    Ok(jobs.iter().flat_map(|&(d, t)| run_trial(cfg, d, t)).collect())
}

pub const ROW_HEADER: [&str; 10] = [
    "experiment", "optimizer", "dimension", "trial", "index", "y", "best_y", "metric", "stable", "wall_clock",
];

/// Serializes `items` with a header; `header` is written on its own when
/// there are no items.
fn write_csv<T: Serialize>(path: &Path, header: &[&str], items: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    let mut empty = true;
    for item in items {
        w.serialize(item)?;
        empty = false;
    }
    if empty {
        w.write_record(header)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `rows.csv`, `summary.csv` and (if any) `failures.csv` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    write_csv(&dir.join("rows.csv"), &ROW_HEADER, result.rows())?;
    write_csv(&dir.join("summary.csv"), &[], &result.summary)?;
    let failures = result.failures();
    let failures_path = dir.join("failures.csv");
    if failures.is_empty() {
        if failures_path.exists() {
            std::fs::remove_file(&failures_path)?;
        }
    } else {
        write_csv(&failures_path, &[], &failures)?;
    }
    Ok(())
}

/// Convenience for callers that only need the spec of a named optimizer.
pub fn find_optimizer<'a>(cfg: &'a ExperimentConfig, name: &str) -> Option<&'a OptimizerSpec> {
    cfg.optimizers.iter().find(|s| s.name() == name)
}
