//! MAP estimation of SE-kernel hyperparameters.
//!
//! Optimizes log marginal likelihood plus log hyperprior over
//! `(log l_1, ..., log l_d, log sf, log sn)` with a deterministic multistart
//! of bounded quasi-Newton ascents. Priors are placed on the lengthscales and
//! on the signal and noise *standard deviations*.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::KernelParams;
use super::posterior::{factor_points, Dataset};
use crate::error::{Error, Result};
use crate::optim::{self, AscentOptions, Bounds};
use crate::rng;

/// Normal priors are truncated from below at this value.
pub const NORMAL_PRIOR_FLOOR: f64 = 1e-3;

/// Prior (or fixed value) for one group of hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamSpec {
    Fixed { value: f64 },
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std: f64 },
}

impl ParamSpec {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            ParamSpec::Fixed { value } => value.is_finite() && value >= 0.0,
            ParamSpec::Uniform { low, high } => low > 0.0 && high > low && high.is_finite(),
            ParamSpec::Normal { mean, std } => std > 0.0 && mean.is_finite() && std.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid hyperprior for {name}: {self:?}")))
        }
    }

    fn log_bounds(&self) -> (f64, f64) {
        match *self {
            ParamSpec::Fixed { value } => (value.ln(), value.ln()),
            ParamSpec::Uniform { low, high } => (low.ln(), high.ln()),
            ParamSpec::Normal { mean, std } => (
                NORMAL_PRIOR_FLOOR.ln(),
                (mean + 6.0 * std).max(10.0 * NORMAL_PRIOR_FLOOR).ln(),
            ),
        }
    }

    /// Most plausible value: the box midpoint or the normal mean.
    fn mode(&self) -> f64 {
        match *self {
            ParamSpec::Fixed { value } => value,
            ParamSpec::Uniform { low, high } => 0.5 * (low + high),
            ParamSpec::Normal { mean, .. } => mean.max(NORMAL_PRIOR_FLOOR),
        }
    }

    /// Log density (up to a constant) and its derivative with respect to
    /// `u = ln(value)`.
    fn log_prior(&self, u: f64) -> (f64, f64) {
        match *self {
            ParamSpec::Normal { mean, std } => {
                let v = u.exp();
                let z = (v - mean) / std;
                (-0.5 * z * z, -z / std * v)
            }
            _ => (0.0, 0.0),
        }
    }

    fn is_fixed(&self) -> bool {
        matches!(self, ParamSpec::Fixed { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperpriors {
    pub lengthscale: ParamSpec,
    pub signal_std: ParamSpec,
    pub noise_std: ParamSpec,
}

impl Hyperpriors {
    pub fn validate(&self) -> Result<()> {
        self.lengthscale.validate("lengthscale")?;
        self.signal_std.validate("signal_std")?;
        self.noise_std.validate("noise_std")?;
        if matches!(self.lengthscale, ParamSpec::Fixed { value } if value <= 0.0)
            || matches!(self.signal_std, ParamSpec::Fixed { value } if value <= 0.0)
        {
            return Err(Error::InvalidInput("fixed lengthscale and signal std must be positive".into()));
        }
        Ok(())
    }

    /// Parameters at the prior modes.
    pub fn prior_mode(&self, dim: usize) -> Result<KernelParams> {
        let sf = self.signal_std.mode();
        let sn = self.noise_std.mode();
        KernelParams::isotropic(dim, self.lengthscale.mode(), sf * sf, sn * sn)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iter: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: KernelParams,
    /// Log marginal likelihood plus log prior at `params`.
    pub objective: f64,
    /// Objective at every start point, in start order.
    pub start_objectives: Vec<f64>,
}

/// Free-parameter layout: which coordinates of the full log vector are optimized.
struct Layout {
    dim: usize,
    priors: Hyperpriors,
}

impl Layout {
    fn specs(&self) -> impl Iterator<Item = ParamSpec> + '_ {
        (0..self.dim)
            .map(|_| self.priors.lengthscale)
            .chain([self.priors.signal_std, self.priors.noise_std])
    }

    fn free_indices(&self) -> Vec<usize> {
        self.specs()
            .enumerate()
            .filter(|(_, s)| !s.is_fixed())
            .map(|(i, _)| i)
            .collect()
    }

    /// Full log-parameter vector with fixed entries filled in.
    fn expand(&self, free: &[f64], template: &[f64]) -> Vec<f64> {
        let mut full = template.to_vec();
        for (slot, v) in self.free_indices().into_iter().zip(free) {
            full[slot] = *v;
        }
        full
    }

    fn to_params(&self, full: &[f64]) -> Option<KernelParams> {
        let d = self.dim;
        let mut params = KernelParams {
            lengthscales: full[..d].iter().map(|u| u.exp()).collect(),
            signal_variance: (2.0 * full[d]).exp(),
            noise_variance: (2.0 * full[d + 1]).exp(),
        };
        // exact fixed values, avoiding the ln/exp round trip
        if let ParamSpec::Fixed { value } = self.priors.lengthscale {
            params.lengthscales.iter_mut().for_each(|l| *l = value);
        }
        if let ParamSpec::Fixed { value } = self.priors.signal_std {
            params.signal_variance = value * value;
        }
        if let ParamSpec::Fixed { value } = self.priors.noise_std {
            params.noise_variance = value * value;
        }
        params.validate().ok().map(|_| params)
    }

    fn to_log(&self, p: &KernelParams) -> Vec<f64> {
        let mut v: Vec<f64> = p.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(0.5 * p.signal_variance.ln());
        v.push(0.5 * p.noise_variance.max(1e-300).ln());
        for (slot, spec) in self.specs().enumerate() {
            if let ParamSpec::Fixed { value } = spec {
                v[slot] = value.max(1e-300).ln();
            }
        }
        v
    }
}

/// Log marginal likelihood of `data` under `params`, with its gradient with
/// respect to `(log l_1..log l_d, log sf, log sn)`.
pub fn log_marginal_likelihood(data: &Dataset, params: &KernelParams) -> Result<(f64, Vec<f64>)> {
    let n = data.len();
    let d = params.dim();
    let (factor, noise) = factor_points(data.points(), params)?;
    let alpha = factor.solve(data.targets())?;
    let fit: f64 = data.targets().iter().zip(&alpha).map(|(y, a)| y * a).sum();
    let lml = -0.5 * fit - 0.5 * factor.log_det() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    // W = alpha alpha^T - K^{-1}; dL/dp = 0.5 tr(W dK/dp)
    let kinv = factor.inverse();
    let pts = data.points();
    let mut grad = vec![0.0; d + 2];
    for i in 0..n {
        for j in 0..=i {
            let w = alpha[i] * alpha[j] - kinv[(i, j)];
            let mult = if i == j { 0.5 } else { 1.0 };
            if i == j {
                grad[d] += mult * w * 2.0 * params.signal_variance;
                grad[d + 1] += mult * w * 2.0 * noise;
                continue;
            }
            let kf = params.k(&pts[i], &pts[j]);
            grad[d] += mult * w * 2.0 * kf;
            for (k, l) in params.lengthscales.iter().enumerate() {
                let r = (pts[i][k] - pts[j][k]) / l;
                grad[k] += mult * w * kf * r * r;
            }
        }
    }
    Ok((lml, grad))
}

/// Fits hyperparameters by MAP on `data`.
///
/// Start 0 is `init` when given (warm start), otherwise the prior mode; the
/// remaining starts are drawn uniformly in the log-space box from a generator
/// seeded with `opts.seed`. Fixed groups are never changed.
pub fn fit_hyperparameters_map(
    data: &Dataset,
    priors: &Hyperpriors,
    init: Option<&KernelParams>,
    opts: &FitOptions,
) -> Result<FitResult> {
    priors.validate()?;
    let dim = data
        .dim()
        .ok_or_else(|| Error::InvalidInput("cannot fit hyperparameters without data".into()))?;
    if data.len() < 2 {
        return Err(Error::InvalidInput("hyperparameter fitting needs at least 2 points".into()));
    }
    if let Some(p) = init {
        Error::check_dim(dim, p.dim())?;
    }
    let layout = Layout { dim, priors: *priors };
    let specs: Vec<ParamSpec> = layout.specs().collect();
    let free = layout.free_indices();
    let mode_params = priors.prior_mode(dim)?;
    let template = layout.to_log(&mode_params);

    let lower: Vec<f64> = free.iter().map(|&i| specs[i].log_bounds().0).collect();
    let upper: Vec<f64> = free.iter().map(|&i| specs[i].log_bounds().1).collect();
    let bounds = Bounds::new(lower, upper);

    let objective = |z: &[f64]| -> (f64, Vec<f64>) {
        let full = layout.expand(z, &template);
        let Some(params) = layout.to_params(&full) else {
            return (f64::NEG_INFINITY, vec![0.0; z.len()]);
        };
        match log_marginal_likelihood(data, &params) {
            Ok((lml, g)) => {
                let mut value = lml;
                let mut grad: Vec<f64> = free.iter().map(|&i| g[i]).collect();
                for (k, &i) in free.iter().enumerate() {
                    let (lp, dlp) = specs[i].log_prior(full[i]);
                    value += lp;
                    grad[k] += dlp;
                }
                if value.is_finite() {
                    (value, grad)
                } else {
                    (f64::NEG_INFINITY, vec![0.0; z.len()])
                }
            }
            Err(_) => (f64::NEG_INFINITY, vec![0.0; z.len()]),
        }
    };

    if free.is_empty() {
        let (value, _) = objective(&[]);
        if !value.is_finite() {
            return Err(Error::Fitting("fixed hyperparameters give a non-finite objective".into()));
        }
        return Ok(FitResult {
            params: mode_params,
            objective: value,
            start_objectives: vec![value],
        });
    }

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(opts.starts.max(1));
    let first_full = init.map(|p| layout.to_log(p)).unwrap_or_else(|| template.clone());
    let mut first: Vec<f64> = free.iter().map(|&i| first_full[i]).collect();
    bounds.clamp(&mut first);
    starts.push(first);
    let mut gen = rng::seeded(opts.seed);
    while starts.len() < opts.starts.max(1) {
        starts.push(
            bounds
                .lower
                .iter()
                .zip(&bounds.upper)
                .map(|(lo, hi)| if hi > lo { gen.random_range(*lo..*hi) } else { *lo })
                .collect(),
        );
    }

    let ascent = AscentOptions {
        max_iter: opts.max_iter,
        grad_tol: 1e-6,
        value_tol: 1e-10,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut start_objectives = Vec::with_capacity(starts.len());
    for s in &starts {
        start_objectives.push(objective(s).0);
        let r = optim::maximize(objective, s, &bounds, &ascent);
        if r.value.is_finite() && best.as_ref().map_or(true, |(v, _)| r.value > *v) {
            best = Some((r.value, r.x));
        }
    }
    let (value, z) = best.ok_or_else(|| Error::Fitting("no start produced a finite objective".into()))?;
    let params = layout
        .to_params(&layout.expand(&z, &template))
        .ok_or_else(|| Error::Fitting("optimum outside the valid parameter range".into()))?;
    Ok(FitResult {
        params,
        objective: value,
        start_objectives,
    })
}
