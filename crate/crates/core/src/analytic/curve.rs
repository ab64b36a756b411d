//! Sampled curves with optional confidence bands.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("x has {x} points but y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("x grid is not strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("bad grid: {0}")]
    BadGrid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub ci_low: Option<Vec<f64>>,
    pub ci_high: Option<Vec<f64>>,
    pub meta: BTreeMap<String, String>,
}

impl CurveTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, CurveError> {
        check_grid(&x)?;
        if x.len() != y.len() {
            return Err(CurveError::LengthMismatch { x: x.len(), y: y.len() });
        }
        Ok(Self {
            x,
            y,
            ci_low: None,
            ci_high: None,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_ci(mut self, low: Vec<f64>, high: Vec<f64>) -> Result<Self, CurveError> {
        for band in [&low, &high] {
            if band.len() != self.x.len() {
                return Err(CurveError::LengthMismatch {
                    x: self.x.len(),
                    y: band.len(),
                });
            }
        }
        self.ci_low = Some(low);
        self.ci_high = Some(high);
        Ok(self)
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_nondecreasing(&self, slack: f64) -> bool {
        self.y.windows(2).all(|w| w[1] >= w[0] - slack)
    }

    /// CSV body: header row from `x_name`/`y_name`, then one row per point.
    pub fn to_csv(&self, x_name: &str, y_name: &str) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut columns = vec![x_name, y_name];
        if self.ci_low.is_some() {
            columns.extend(["ci_low", "ci_high"]);
        }
        // writes into memory cannot fail
        w.write_record(&columns).expect("in-memory write");
        for i in 0..self.x.len() {
            let mut row = vec![format_float(self.x[i]), format_float(self.y[i])];
            if let (Some(lo), Some(hi)) = (&self.ci_low, &self.ci_high) {
                row.extend([format_float(lo[i]), format_float(hi[i])]);
            }
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("UTF-8 fields")
    }
}

fn check_grid(x: &[f64]) -> Result<(), CurveError> {
    for (i, w) in x.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(CurveError::NotIncreasing(i + 1));
        }
    }
    Ok(())
}

/// Shortest round-trip text for `v`; exponent form outside `[1e-4, 1e9)`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e9).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CurveError> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(CurveError::BadGrid(format!("log grid {lo}..{hi} with {n} points")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CurveError> {
    if !(hi > lo && n >= 2) || !lo.is_finite() || !hi.is_finite() {
        return Err(CurveError::BadGrid(format!("linear grid {lo}..{hi} with {n} points")));
    }
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}
