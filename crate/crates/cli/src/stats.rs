//! Order statistics used by the summaries and curve export.

use statrs::statistics::Statistics;

/// Linearly interpolated quantile (the "inclusive" spreadsheet definition):
/// position `q (n - 1)` in the sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi || sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    let w = pos - lo as f64;
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub p02: f64,
    pub p25: f64,
    pub p75: f64,
    pub p98: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len();
    let std = if n < 2 { 0.0 } else { values.iter().std_dev() };
    Summary {
        n,
        mean: values.iter().mean(),
        median: quantile(&sorted, 0.5),
        std,
        p02: quantile(&sorted, 0.02),
        p25: quantile(&sorted, 0.25),
        p75: quantile(&sorted, 0.75),
        p98: quantile(&sorted, 0.98),
    }
}
