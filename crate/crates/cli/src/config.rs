//! Experiment configuration (TOML).
//!
//! ```toml
//! name = "within"
//! kind = "synthetic-within"     # synthetic-out | lqr
//! seed = 7
//! trials = 20
//! budget = 300                  # evaluations, or timesteps for lqr
//! dimensions = [2, 8, 16]
//!
//! [[optimizers]]
//! kind = "gibo"
//!
//! [[optimizers]]
//! kind = "ars"
//! perturbation = 0.01
//! ```
//!
//! Unset optimizer fields take the published defaults for the experiment
//! kind and dimension.

use std::path::{Path, PathBuf};

use gibo_core::baselines::{ArsConfig, EiConfig};
use gibo_core::gp::{FitOptions, Hyperpriors, KernelParams, ParamSpec};
use gibo_core::lqr::RolloutConfig;
use gibo_core::optimizer::{GiboConfig, HyperparameterPolicy};
use gibo_core::acquisition::GiOptions;
use gibo_core::synthetic::{delta_sub, LengthscaleDistribution, SyntheticObjective};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SyntheticWithin,
    SyntheticOut,
    Lqr,
}

impl ExperimentKind {
    pub fn is_synthetic(self) -> bool {
        !matches!(self, ExperimentKind::Lqr)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GiboSpec {
    pub name: Option<String>,
    pub stepsize: Option<f64>,
    pub samples_per_step: Option<usize>,
    pub window: Option<usize>,
    pub bound: Option<f64>,
    pub normalize_gradient: Option<bool>,
    /// GI local ascents per query.
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArsSpec {
    pub name: Option<String>,
    pub stepsize: Option<f64>,
    pub perturbation: Option<f64>,
    pub directions: Option<usize>,
    pub elite: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoSpec {
    pub name: Option<String>,
    pub xi: Option<f64>,
    pub restarts: Option<usize>,
    pub raw_samples: Option<usize>,
    pub refit_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerSpec {
    Gibo(GiboSpec),
    Ars(ArsSpec),
    Bo(BoSpec),
}

impl OptimizerSpec {
    pub fn name(&self) -> String {
        match self {
            OptimizerSpec::Gibo(s) => s.name.clone().unwrap_or_else(|| "gibo".into()),
            OptimizerSpec::Ars(s) => s.name.clone().unwrap_or_else(|| "ars".into()),
            OptimizerSpec::Bo(s) => s.name.clone().unwrap_or_else(|| "vbo".into()),
        }
    }
}

fn default_optimizers() -> Vec<OptimizerSpec> {
    vec![OptimizerSpec::Gibo(GiboSpec::default()), OptimizerSpec::Ars(ArsSpec::default())]
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestGuessMode {
    #[default]
    TrueValue,
    Observed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqrSection {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
}

fn default_horizon() -> usize {
    300
}

fn default_trajectories() -> usize {
    1
}

impl Default for LqrSection {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            trajectories: default_trajectories(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub budget: usize,
    #[serde(default)]
    pub dimensions: Vec<usize>,
    #[serde(default = "default_optimizers")]
    pub optimizers: Vec<OptimizerSpec>,
    /// Concurrent trials; 0 uses all cores.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Output directory (overridden by `--out`).
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Record per-evaluation wall-clock seconds; off by default so result
    /// files are reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub best_guess: BestGuessMode,
    #[serde(default)]
    pub lqr: LqrSection,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_workers() -> usize {
    1
}

fn field_err(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// `line N` for syntax errors that have no field to point at.
fn span_path(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    span.map(|s| format!("line {}", text[..s.start.min(text.len())].matches('\n').count() + 1))
        .unwrap_or_else(|| "<root>".into())
}

/// Serde loses field paths inside the internally tagged optimizer tables;
/// re-reads `optimizers[i]` as its concrete spec type to recover them.
fn optimizer_field_path(text: &str, path: &str) -> Option<String> {
    let index: usize = path.strip_prefix("optimizers[")?.strip_suffix(']')?.parse().ok()?;
    let doc: toml::Table = toml::from_str(text).ok()?;
    let mut table = doc.get("optimizers")?.as_array()?.get(index)?.as_table()?.clone();
    let kind = table.remove("kind")?;
    fn inner<T: serde::de::DeserializeOwned>(t: toml::Table) -> Option<String> {
        serde_path_to_error::deserialize::<_, T>(toml::Value::Table(t)).err().map(|e| e.path().to_string())
    }
    let field = match kind.as_str()? {
        "gibo" => inner::<GiboSpec>(table),
        "ars" => inner::<ArsSpec>(table),
        "bo" => inner::<BoSpec>(table),
        _ => None,
    }?;
    Some(if field == "." { path.to_string() } else { format!("{path}.{field}") })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| field_err(span_path(text, e.span()), e.message()))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let path = if path == "." {
                span_path(text, inner.span())
            } else {
                optimizer_field_path(text, &path).unwrap_or(path)
            };
            field_err(path, inner.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| field_err(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    /// Dimensions to sweep; the gain size for LQR.
    pub fn sweep_dimensions(&self) -> Vec<usize> {
        if self.kind.is_synthetic() {
            self.dimensions.clone()
        } else {
            vec![9]
        }
    }

    /// Oracle calls available per trial.
    pub fn calls(&self) -> usize {
        match self.kind {
            ExperimentKind::Lqr => self.budget / self.rollout().timesteps_per_call(),
            _ => self.budget,
        }
    }

    pub fn rollout(&self) -> RolloutConfig {
        RolloutConfig {
            horizon: self.lqr.horizon,
            trajectories: self.lqr.trajectories,
            ..RolloutConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(field_err("trials", "must be at least 1"));
        }
        if self.optimizers.is_empty() {
            return Err(field_err("optimizers", "at least one optimizer is required"));
        }
        if self.kind.is_synthetic() {
            if self.dimensions.is_empty() {
                return Err(field_err("dimensions", "synthetic experiments need at least one dimension"));
            }
            for (i, d) in self.dimensions.iter().enumerate() {
                if *d == 0 || *d > gibo_core::synthetic::sobol::MAX_DIM {
                    return Err(field_err(format!("dimensions[{i}]"), format!("{d} is outside 1..=36")));
                }
            }
        } else {
            if self.lqr.horizon == 0 || self.lqr.trajectories == 0 {
                return Err(field_err("lqr", "horizon and trajectories must be positive"));
            }
        }
        let mut names = Vec::new();
        for (i, spec) in self.optimizers.iter().enumerate() {
            let name = spec.name();
            if names.contains(&name) {
                return Err(field_err(format!("optimizers[{i}].name"), format!("duplicate optimizer name {name:?}")));
            }
            names.push(name);
            if matches!(spec, OptimizerSpec::Bo(_)) && !self.kind.is_synthetic() {
                return Err(field_err(format!("optimizers[{i}].kind"), "vanilla BO needs a bounded domain (synthetic only)"));
            }
            for d in self.sweep_dimensions() {
                let unit = self.resolve(spec, d).map_err(|m| field_err(format!("optimizers[{i}]"), m))?.unit();
                if self.calls() < unit {
                    return Err(field_err(
                        "budget",
                        format!("{} oracle calls cannot fit one {} update ({unit} calls) at d = {d}", self.calls(), spec.name()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Concrete optimizer settings for dimension `d`.
    pub fn resolve(&self, spec: &OptimizerSpec, d: usize) -> Result<ResolvedOptimizer, String> {
        match spec {
            OptimizerSpec::Gibo(s) => {
                let defaults = gibo_defaults(self.kind, d);
                let cfg = GiboConfig {
                    stepsize: s.stepsize.unwrap_or(defaults.stepsize),
                    samples_per_step: s.samples_per_step.unwrap_or(defaults.samples_per_step),
                    window: s.window.unwrap_or(defaults.window),
                    bound: s.bound.unwrap_or(defaults.bound),
                    normalize_gradient: s.normalize_gradient.unwrap_or(defaults.normalize_gradient),
                    acquisition: GiOptions {
                        restarts: s.restarts.unwrap_or(defaults.acquisition.restarts),
                        ..defaults.acquisition
                    },
                    ..defaults
                };
                if let HyperparameterPolicy::Map { priors } = &cfg.hyperparameters {
                    priors.validate().map_err(|e| e.to_string())?;
                }
                if cfg.samples_per_step == 0 || cfg.window < cfg.samples_per_step + 1 || !(cfg.stepsize > 0.0) || !(cfg.bound > 0.0) {
                    return Err("GIBO needs stepsize > 0, bound > 0, samples_per_step >= 1 and window > samples_per_step".into());
                }
                Ok(ResolvedOptimizer::Gibo(cfg))
            }
            OptimizerSpec::Ars(s) => {
                let defaults = ars_defaults(self.kind, d);
                let cfg = ArsConfig {
                    stepsize: s.stepsize.unwrap_or(defaults.stepsize),
                    perturbation: s.perturbation.unwrap_or(defaults.perturbation),
                    directions: s.directions.unwrap_or(defaults.directions),
                    elite: s.elite.unwrap_or(defaults.elite),
                    state_normalization: false,
                };
                cfg.validate().map_err(|e| e.to_string())?;
                Ok(ResolvedOptimizer::Ars(cfg))
            }
            OptimizerSpec::Bo(s) => {
                let defaults = EiConfig::default();
                let cfg = EiConfig {
                    xi: s.xi.unwrap_or(defaults.xi),
                    restarts: s.restarts.unwrap_or(defaults.restarts),
                    raw_samples: s.raw_samples.unwrap_or(defaults.raw_samples),
                    refit_every: s.refit_every.unwrap_or(defaults.refit_every),
                    ..defaults
                };
                cfg.validate().map_err(|e| e.to_string())?;
                Ok(ResolvedOptimizer::Bo(cfg))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ResolvedOptimizer {
    Gibo(GiboConfig),
    Ars(ArsConfig),
    Bo(EiConfig),
}

impl ResolvedOptimizer {
    /// Smallest number of oracle calls the optimizer can spend.
    pub fn unit(&self) -> usize {
        match self {
            ResolvedOptimizer::Gibo(c) => c.evaluations_per_iteration(),
            ResolvedOptimizer::Ars(c) => c.evaluations_per_update(),
            ResolvedOptimizer::Bo(_) => 1,
        }
    }
}

/// Observation noise of the synthetic objectives.
const SYNTHETIC_NOISE_STD: f64 = 0.1;

/// Published GIBO settings; within-model kernel parameters are filled in per
/// objective by [`within_model_params`].
pub fn gibo_defaults(kind: ExperimentKind, d: usize) -> GiboConfig {
    let acquisition = GiOptions::default();
    let fit = FitOptions::default();
    match kind {
        ExperimentKind::SyntheticWithin | ExperimentKind::SyntheticOut => GiboConfig {
            stepsize: 0.25,
            samples_per_step: d,
            window: 5 * d,
            bound: 0.2,
            normalize_gradient: true,
            hyperparameters: if kind == ExperimentKind::SyntheticOut {
                HyperparameterPolicy::Map {
                    priors: out_of_model_priors(d),
                }
            } else {
                // placeholder until the objective's own lengthscale is known
                HyperparameterPolicy::Fixed {
                    params: KernelParams::isotropic(d, 2.0 * delta_sub(d), 1.0, SYNTHETIC_NOISE_STD.powi(2))
                        .expect("valid default kernel"),
                }
            },
            acquisition,
            fit,
        },
        ExperimentKind::Lqr => GiboConfig {
            stepsize: 1.0,
            samples_per_step: 9,
            window: 40,
            bound: 0.1,
            normalize_gradient: true,
            hyperparameters: HyperparameterPolicy::Map { priors: lqr_priors() },
            acquisition,
            fit,
        },
    }
}

pub fn out_of_model_priors(d: usize) -> Hyperpriors {
    Hyperpriors {
        lengthscale: LengthscaleDistribution::new(d).as_prior(),
        signal_std: ParamSpec::Uniform { low: 0.1, high: 5.0 },
        noise_std: ParamSpec::Fixed {
            value: SYNTHETIC_NOISE_STD,
        },
    }
}

pub fn lqr_priors() -> Hyperpriors {
    Hyperpriors {
        lengthscale: ParamSpec::Uniform { low: 0.01, high: 0.3 },
        signal_std: ParamSpec::Normal { mean: 20.0, std: 5.0 },
        noise_std: ParamSpec::Fixed { value: 2.0 },
    }
}

/// The generating kernel of `obj` with the observation noise as likelihood.
pub fn within_model_params(obj: &SyntheticObjective) -> KernelParams {
    obj.params.clone()
}

pub fn ars_defaults(kind: ExperimentKind, d: usize) -> ArsConfig {
    match kind {
        ExperimentKind::SyntheticWithin => ArsConfig {
            stepsize: 0.02,
            perturbation: 0.1 * 2.0 * delta_sub(d),
            directions: 1 + d / 8,
            elite: 0,
            state_normalization: false,
        },
        ExperimentKind::SyntheticOut => ArsConfig {
            stepsize: 0.02,
            perturbation: 0.01,
            directions: 1 + d / 8,
            elite: 0,
            state_normalization: false,
        },
        // not published for this benchmark; see the README
        ExperimentKind::Lqr => ArsConfig {
            stepsize: 0.02,
            perturbation: 0.03,
            directions: 4,
            elite: 2,
            state_normalization: false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "synthetic-within"
budget = 30
trials = 3
dimensions = [2]
"#;

    #[test]
    fn defaults_apply() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.optimizers.len(), 2);
        let ResolvedOptimizer::Gibo(g) = c.resolve(&c.optimizers[0], 8).unwrap() else {
            panic!()
        };
        assert_eq!((g.samples_per_step, g.window), (8, 40));
        let ResolvedOptimizer::Ars(a) = c.resolve(&c.optimizers[1], 16).unwrap() else {
            panic!()
        };
        assert_eq!(a.directions, 3);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("trials = 3", "trials = 0");
        match ExperimentConfig::from_toml(&bad) {
            Err(CliError::Config { path, .. }) => assert_eq!(path, "trials"),
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("budget = 30", "budget = 2");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(CliError::Config { path, .. }) if path == "budget"));
        assert!(ExperimentConfig::from_toml("kind = \"nope\"\nbudget = 1").is_err());
        let nested = format!("{MINIMAL}\n[[optimizers]]\nkind = \"ars\"\nperturbation = true\n");
        assert!(matches!(ExperimentConfig::from_toml(&nested),
            Err(CliError::Config { path, .. }) if path == "optimizers[0].perturbation"));
        let syntax = format!("{MINIMAL}\nseed = [");
        assert!(matches!(ExperimentConfig::from_toml(&syntax), Err(CliError::Config { path, .. }) if path.starts_with("line ")));
    }
}
