//! Per-evaluation run records shared by all optimizers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// Zero-based evaluation index.
    pub index: usize,
    pub point: Vec<f64>,
    pub y: f64,
    /// The optimizer's current iterate when this point was queried.
    pub iterate: Vec<f64>,
    pub best_y: f64,
    pub best_point: Vec<f64>,
}

/// One parameter update of an iterate-based optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Number of evaluations consumed when the step was taken.
    pub after_evaluations: usize,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    /// Lengthscales used to normalize the step, when normalization was on.
    pub lengthscales: Option<Vec<f64>>,
    /// The gradient estimate was (numerically) zero and the iterate stayed put.
    pub degenerate: bool,
}

impl StepRecord {
    /// `sqrt(dx^T L dx)` with `L = diag(1/l^2)`; `None` without lengthscales.
    pub fn mahalanobis_length(&self) -> Option<f64> {
        let ls = self.lengthscales.as_ref()?;
        Some(
            self.from
                .iter()
                .zip(&self.to)
                .zip(ls)
                .map(|((a, b), l)| ((b - a) / l).powi(2))
                .sum::<f64>()
                .sqrt(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub records: Vec<EvalRecord>,
    pub steps: Vec<StepRecord>,
}

impl RunHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records an evaluation; the best-so-far fields keep the earliest
    /// maximal observation.
    pub fn push(&mut self, point: Vec<f64>, y: f64, iterate: Vec<f64>) {
        let (best_y, best_point) = match self.records.last() {
            Some(last) if last.best_y >= y => (last.best_y, last.best_point.clone()),
            _ => (y, point.clone()),
        };
        self.records.push(EvalRecord {
            index: self.records.len(),
            point,
            y,
            iterate,
            best_y,
            best_point,
        });
    }

    pub fn last(&self) -> Option<&EvalRecord> {
        self.records.last()
    }
}
