//! Model parameters.
//!
//! Densities are stored as the user supplies them (per km²); every method
//! with an `_m2` suffix returns the per-m² value used by the math.

use rand::Rng;
use thiserror::Error;

const KM2_TO_M2: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} must be finite and non-negative, got {value}")]
    NegativeDensity { name: &'static str, value: f64 },
    #[error("mu must lie in [0, 1], got {0}")]
    FractionOutOfRange(f64),
    #[error("blockage lengths must satisfy 0 < len_min <= len_max, got [{min}, {max}]")]
    LengthRange { min: f64, max: f64 },
    #[error("mean_len {mean} is not the midpoint of [{min}, {max}]")]
    LengthMean { mean: f64, min: f64, max: f64 },
    #[error("path-loss exponent must exceed 2, got {0}")]
    PathLossExponent(f64),
    #[error("meta-surface distribution: {0}")]
    MetaDistribution(String),
}

/// PMF of the number of meta-surfaces per RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaSurfaceDistribution {
    support: Vec<u32>,
    probs: Vec<f64>,
}

impl MetaSurfaceDistribution {
    pub fn new(support: Vec<u32>, probs: Vec<f64>) -> Result<Self, ParamError> {
        let bad = |m: &str| Err(ParamError::MetaDistribution(m.to_string()));
        if support.is_empty() {
            return bad("empty support");
        }
        if support.len() != probs.len() {
            return bad("support and probabilities differ in length");
        }
        if support.contains(&0) {
            return bad("meta-surface counts must be >= 1");
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return bad("duplicate meta-surface count");
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad("probabilities must be finite and non-negative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ParamError::MetaDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { support, probs })
    }

    /// Every RIS carries exactly `m` meta-surfaces.
    pub fn fixed(m: u32) -> Result<Self, ParamError> {
        Self::new(vec![m], vec![1.0])
    }

    /// Uniform over `lo..=hi`.
    pub fn uniform(lo: u32, hi: u32) -> Result<Self, ParamError> {
        if lo == 0 || hi < lo {
            return Err(ParamError::MetaDistribution(format!("bad uniform range {lo}..={hi}")));
        }
        let n = (hi - lo + 1) as usize;
        let mut probs = vec![1.0 / n as f64; n];
        // absorb rounding so the sum is 1 to the last bit
        let head: f64 = probs[..n - 1].iter().sum();
        probs[n - 1] = 1.0 - head;
        Self::new((lo..=hi).collect(), probs)
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn max(&self) -> u32 {
        self.support.iter().copied().max().unwrap_or(1)
    }

    pub fn is_fixed(&self) -> bool {
        self.support.len() == 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.sample_from_uniform(rng.random::<f64>())
    }

    /// Inverse-CDF lookup for a uniform variate `u ∈ [0, 1)`.
    pub fn sample_from_uniform(&self, u: f64) -> u32 {
        let mut acc = 0.0;
        for (k, p) in self.iter() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        *self.support.last().expect("non-empty support")
    }
}

impl Default for MetaSurfaceDistribution {
    fn default() -> Self {
        Self {
            support: vec![1],
            probs: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    /// BS density, per km².
    pub lambda_bs: f64,
    /// Blockage density, per km².
    pub lambda_b: f64,
    /// User density, per km².
    pub lambda_u: f64,
    /// Fraction of blockages carrying an RIS.
    pub mu: f64,
    /// Mean blockage length, meters.
    pub mean_len: f64,
    pub len_min: f64,
    pub len_max: f64,
    pub alpha: f64,
    pub meta_dist: MetaSurfaceDistribution,
}

impl NetworkParams {
    pub const DEFAULT_LAMBDA_BS: f64 = 10.0;
    pub const DEFAULT_LAMBDA_U: f64 = 300.0;
    pub const DEFAULT_MEAN_LEN: f64 = 15.0;
    pub const DEFAULT_ALPHA: f64 = 3.0;

    /// Evaluation defaults with the given blockage density and RIS fraction.
    pub fn new(lambda_b: f64, mu: f64) -> Self {
        let (len_min, len_max) = default_length_range(Self::DEFAULT_MEAN_LEN);
        Self {
            lambda_bs: Self::DEFAULT_LAMBDA_BS,
            lambda_b,
            lambda_u: Self::DEFAULT_LAMBDA_U,
            mu,
            mean_len: Self::DEFAULT_MEAN_LEN,
            len_min,
            len_max,
            alpha: Self::DEFAULT_ALPHA,
            meta_dist: MetaSurfaceDistribution::default(),
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_lambda_b(mut self, lambda_b: f64) -> Self {
        self.lambda_b = lambda_b;
        self
    }

    pub fn with_lambda_bs(mut self, lambda_bs: f64) -> Self {
        self.lambda_bs = lambda_bs;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_meta(mut self, meta_dist: MetaSurfaceDistribution) -> Self {
        self.meta_dist = meta_dist;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value) in [
            ("lambda_bs", self.lambda_bs),
            ("lambda_b", self.lambda_b),
            ("lambda_u", self.lambda_u),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParamError::NegativeDensity { name, value });
            }
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(ParamError::FractionOutOfRange(self.mu));
        }
        if !(self.len_min > 0.0 && self.len_min <= self.len_max && self.len_max.is_finite()) {
            return Err(ParamError::LengthRange {
                min: self.len_min,
                max: self.len_max,
            });
        }
        let mid = 0.5 * (self.len_min + self.len_max);
        if (mid - self.mean_len).abs() > 1e-9 * self.mean_len.abs().max(1.0) {
            return Err(ParamError::LengthMean {
                mean: self.mean_len,
                min: self.len_min,
                max: self.len_max,
            });
        }
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(ParamError::PathLossExponent(self.alpha));
        }
        // re-run the distribution checks in case fields were built by hand
        MetaSurfaceDistribution::new(self.meta_dist.support.clone(), self.meta_dist.probs.clone())?;
        Ok(())
    }

    pub fn lambda_bs_m2(&self) -> f64 {
        self.lambda_bs * KM2_TO_M2
    }

    pub fn lambda_b_m2(&self) -> f64 {
        self.lambda_b * KM2_TO_M2
    }

    pub fn lambda_u_m2(&self) -> f64 {
        self.lambda_u * KM2_TO_M2
    }

    /// RIS density `μ λ_b`, per m².
    pub fn lambda_r_m2(&self) -> f64 {
        self.mu * self.lambda_b_m2()
    }

    /// RIS density `μ λ_b`, per km².
    pub fn lambda_r(&self) -> f64 {
        self.mu * self.lambda_b
    }
}

/// `[mean/3, 5·mean/3]`, i.e. 5–25 m around the 15 m default mean.
pub fn default_length_range(mean_len: f64) -> (f64, f64) {
    (mean_len / 3.0, 5.0 * mean_len / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = NetworkParams::new(300.0, 0.0);
        p.validate().unwrap();
        assert_eq!((p.len_min, p.len_max), (5.0, 25.0));
        assert_eq!(p.lambda_r_m2(), 0.0);
    }

    #[test]
    fn unit_conversion() {
        let p = NetworkParams::new(500.0, 0.2);
        assert!((p.lambda_b_m2() - 5e-4).abs() < 1e-18);
        assert!((p.lambda_r_m2() - 1e-4).abs() < 1e-18);
        assert!((p.lambda_bs_m2() - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn invalid_fields_are_rejected() {
        assert!(matches!(
            NetworkParams::new(300.0, 1.5).validate(),
            Err(ParamError::FractionOutOfRange(_))
        ));
        assert!(NetworkParams::new(-1.0, 0.0).validate().is_err());
        assert!(NetworkParams::new(300.0, 0.0).with_alpha(2.0).validate().is_err());
        let mut p = NetworkParams::new(300.0, 0.0);
        p.len_max = 30.0;
        assert!(matches!(p.validate(), Err(ParamError::LengthMean { .. })));
    }

    #[test]
    fn meta_distribution_checks() {
        assert!(MetaSurfaceDistribution::new(vec![1, 2], vec![0.5, 0.4]).is_err());
        assert!(MetaSurfaceDistribution::new(vec![1, 1], vec![0.5, 0.5]).is_err());
        assert!(MetaSurfaceDistribution::new(vec![0], vec![1.0]).is_err());
        let u = MetaSurfaceDistribution::uniform(1, 3).unwrap();
        assert!((u.mean() - 2.0).abs() < 1e-15);
        assert_eq!(u.max(), 3);
        let f = MetaSurfaceDistribution::fixed(2).unwrap();
        assert!(f.is_fixed());
        assert_eq!(f.mean(), 2.0);
    }

    #[test]
    fn inverse_cdf_sampling() {
        let d = MetaSurfaceDistribution::new(vec![1, 4], vec![0.25, 0.75]).unwrap();
        assert_eq!(d.sample_from_uniform(0.0), 1);
        assert_eq!(d.sample_from_uniform(0.2499), 1);
        assert_eq!(d.sample_from_uniform(0.25), 4);
        assert_eq!(d.sample_from_uniform(0.999_999), 4);
    }
}
