//! Sample statistics shared by the estimators.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;
/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.645;

/// A Monte Carlo point estimate with its 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_halfwidth: f64,
}

impl Estimate {
    /// Mean and `1.96 * stderr` of a sample. A single observation gets an
    /// infinite half-width.
    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, var) = mean_var(xs);
        let ci_halfwidth = if xs.len() < 2 {
            f64::INFINITY
        } else {
            Z95 * (var / xs.len() as f64).sqrt()
        };
        Estimate { mean, ci_halfwidth }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.mean - x).abs() <= self.ci_halfwidth
    }
}

/// Sample mean and unbiased variance (Welford).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    let var = if xs.len() > 1 { m2 / (xs.len() - 1) as f64 } else { 0.0 };
    (mean, var)
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::INFINITY;
    }
    (mean_var(xs).1 / xs.len() as f64).sqrt()
}

/// Streaming mean and variance (Welford), for estimators that never hold
/// their samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn estimate(&self) -> Estimate {
        let ci_halfwidth = if self.count < 2 {
            f64::INFINITY
        } else {
            Z95 * (self.variance() / self.count as f64).sqrt()
        };
        Estimate {
            mean: self.mean,
            ci_halfwidth,
        }
    }
}
