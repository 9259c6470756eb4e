//! Streaming per-coordinate mean and variance (Welford) and the state
//! normalization transform for linear policies.

/// Standard deviations below this are replaced by 1 before dividing.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct WelfordState {
    count: u64,
    mean: Vec<f64>,
    /// Sum of squared distances from the mean, per coordinate.
    m2: Vec<f64>,
}

impl WelfordState {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sum_sq(&self) -> &[f64] {
        &self.m2
    }

    /// # Panics
    /// If `x` does not match the state's dimension.
    pub fn update(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.mean.len(), "welford update dimension mismatch");
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), xi) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = xi - *m;
            *m += delta / n;
            *s += delta * (xi - *m);
        }
    }

    /// `(mean, sample variance)`; with fewer than two samples the variance is
    /// all ones so a normalizer built from it is the identity scale.
    pub fn finalize(&self) -> (Vec<f64>, Vec<f64>) {
        let var = if self.count < 2 {
            vec![1.0; self.mean.len()]
        } else {
            let denom = (self.count - 1) as f64;
            self.m2.iter().map(|s| s / denom).collect()
        };
        (self.mean.clone(), var)
    }

    pub fn std(&self) -> Vec<f64> {
        self.finalize().1.into_iter().map(f64::sqrt).collect()
    }
}

pub fn welford_update(mut state: WelfordState, x: &[f64]) -> WelfordState {
    state.update(x);
    state
}

pub fn welford_finalize(state: &WelfordState) -> (Vec<f64>, Vec<f64>) {
    state.finalize()
}

/// `(s - mean) / std` element-wise, with tiny standard deviations floored to 1.
pub fn normalize_state(s: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    s.iter()
        .zip(mean)
        .zip(std)
        .map(|((x, m), sd)| {
            let sd = if *sd < STD_FLOOR { 1.0 } else { *sd };
            (x - m) / sd
        })
        .collect()
}
