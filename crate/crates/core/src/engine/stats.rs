//! Replication statistics.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided confidence level used for every reported interval.
pub const CONFIDENCE: f64 = 0.99;

/// Mean and 99% Student-t half-width over independent replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// NaN when fewer than two values were available.
    pub ci99: f64,
    pub n: usize,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary { mean: f64::NAN, ci99: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Summary { mean, ci99: f64::NAN, n };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let ci99 = t_quantile(n - 1) * (var / n as f64).sqrt();
        Summary { mean, ci99, n }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci99
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci99
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower() <= value && value <= self.upper()
    }

    pub fn overlaps(&self, other: &Summary) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

/// Upper `(1 + CONFIDENCE) / 2` quantile of Student's t.
pub fn t_quantile(degrees_of_freedom: usize) -> f64 {
    StudentsT::new(0.0, 1.0, degrees_of_freedom as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + CONFIDENCE / 2.0)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
