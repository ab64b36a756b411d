//! Replication estimates and their confidence intervals.

use super::{Mode, MonteCarloError};
use statrs::distribution::{ContinuousCDF, Normal};

/// Smallest replication count accepted for an interval estimate.
pub const MIN_REPLICATIONS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
    pub successes: u64,
    pub mode: Mode,
    pub ci_level: f64,
}

impl Estimate {
    /// Proportion estimate from an indicator count. Uses the normal
    /// approximation unless the mean is within `5/n` of 0 or 1, where the
    /// Wilson score interval takes over.
    pub fn from_counts(successes: u64, n: u64, ci_level: f64, mode: Mode) -> Result<Self, MonteCarloError> {
        if n < MIN_REPLICATIONS {
            return Err(MonteCarloError::TooFewReplications(n));
        }
        if successes > n {
            return Err(MonteCarloError::InvalidCount { successes, n });
        }
        let z = z_score(ci_level)?;
        let nf = n as f64;
        let p = successes as f64 / nf;
        let (lo, hi) = if p <= 5.0 / nf || p >= 1.0 - 5.0 / nf {
            wilson(p, nf, z)
        } else {
            let half = z * (p * (1.0 - p) / nf).sqrt();
            (p - half, p + half)
        };
        Ok(Self {
            mean: p,
            ci_low: lo.clamp(0.0, p),
            ci_high: hi.clamp(p, 1.0),
            n,
            successes,
            mode,
            ci_level,
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.ci_low && value <= self.ci_high
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Two-sided standard-normal quantile for the given confidence level.
pub fn z_score(ci_level: f64) -> Result<f64, MonteCarloError> {
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(MonteCarloError::InvalidCiLevel(ci_level));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + 0.5 * ci_level))
}

fn wilson(p: f64, n: f64, z: f64) -> (f64, f64) {
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center - half, center + half)
}
