//! Monte Carlo estimates with standard errors, and an order-preserving parallel map.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::operator::{HVector, OperatorMatrix};

/// Sample mean of a real quantity and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// Two-pass mean and standard error, summed in input order.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                samples: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            samples: n,
        }
    }

    /// Number of standard errors separating the estimate from `target`.
    /// Exact agreement with zero standard error returns 0.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Estimate of a complex expectation with separate errors on each component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub re: Estimate,
    pub im: Estimate,
}

impl ComplexEstimate {
    pub fn from_samples(values: &[Complex64]) -> Self {
        let re: Vec<f64> = values.iter().map(|z| z.re).collect();
        let im: Vec<f64> = values.iter().map(|z| z.im).collect();
        Self {
            re: Estimate::from_samples(&re),
            im: Estimate::from_samples(&im),
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.mean, self.im.mean)
    }

    /// Largest component-wise z-score against `target`.
    pub fn z_score(&self, target: Complex64) -> f64 {
        self.re.z_score(target.re).max(self.im.z_score(target.im))
    }
}

/// Combined z-score of the difference between two independent estimates.
pub fn combined_z(a: &Estimate, b: &Estimate) -> f64 {
    let d = (a.mean - b.mean).abs();
    if d == 0.0 {
        0.0
    } else {
        d / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
    }
}

/// Unbiased sample covariance of vector-valued draws.
pub fn sample_covariance(samples: &[HVector]) -> OperatorMatrix {
    let n = samples.first().map_or(0, |s| s.len());
    if samples.len() < 2 {
        return OperatorMatrix::zeros(n, n);
    }
    let mean = samples.iter().fold(HVector::zeros(n), |acc, s| acc + s) / samples.len() as f64;
    let mut acc = OperatorMatrix::zeros(n, n);
    for s in samples {
        let d = s - &mean;
        acc.ger(1.0, &d, &d, 1.0);
    }
    acc / (samples.len() - 1) as f64
}

/// Runs `f` for indices `0..count` in parallel and returns the results in index order.
pub fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}
