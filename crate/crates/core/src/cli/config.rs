//! Line-oriented `key = value` run configuration.
//!
//! Densities are per km², lengths in meters. Lists are comma separated;
//! grids are either a list, `lo:hi:n` (linear) or `log:lo:hi:n`.

use crate::analytic::{
    default_length_range, linear_grid, log_grid, truncation_horizon, AnalyticError, MetaSurfaceDistribution,
    NetworkParams, ParamError,
};
use crate::geometry::Window;
use crate::montecarlo::Mode;
use crate::quadrature::DEFAULT_TAIL_TOL;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

/// Every key the parser accepts.
pub const KNOWN_KEYS: &[&str] = &[
    "lambda_bs",
    "lambda_b",
    "lambda_u",
    "mu",
    "mean_len",
    "len_min",
    "len_max",
    "alpha",
    "meta_fixed",
    "meta_support",
    "meta_probs",
    "meta_uniform",
    "window_size",
    "guard_margin",
    "seeds",
    "sweep",
    "grid",
    "mode",
    "n_reps",
    "output_dir",
    "ci_level",
    "tau",
    "raster_resolution",
    "raster_mus",
    "figure_lambda_bs",
    "figure_mus",
    "figure_curve_mus",
    "figure_points",
];

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}`{key}`: {message}", location(*line))]
pub struct ConfigError {
    /// 1-based line number; 0 when the key is missing altogether.
    pub line: usize,
    pub key: String,
    pub message: String,
}

fn location(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!("line {line}: ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Mu,
    LambdaB,
    Tau,
    R,
    X,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::Mu => "mu",
            SweepVar::LambdaB => "lambda_b",
            SweepVar::Tau => "tau",
            SweepVar::R => "r",
            SweepVar::X => "x",
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "mu" => SweepVar::Mu,
            "lambda_b" => SweepVar::LambdaB,
            "tau" => SweepVar::Tau,
            "r" => SweepVar::R,
            "x" => SweepVar::X,
            other => {
                return Err(format!(
                    "unknown sweep variable `{other}` (expected mu, lambda_b, tau, r or x)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: NetworkParams,
    /// Measurement window; its guard is `guard_margin` or the truncation
    /// horizon of `params`.
    pub window: Window,
    /// Explicit guard band; `None` follows the horizon of each sweep point.
    pub guard_margin: Option<f64>,
    pub seeds: Vec<u64>,
    pub sweep: Option<Sweep>,
    pub mode: Mode,
    pub n_reps: u64,
    pub output_dir: PathBuf,
    pub ci_level: f64,
    /// Path-loss threshold for single-point coverage outputs.
    pub tau: f64,
    pub raster_resolution: f64,
    pub raster_mus: Vec<f64>,
    pub figure_lambda_bs: Vec<f64>,
    pub figure_mus: Vec<f64>,
    pub figure_curve_mus: Vec<f64>,
    /// Points per curve in the figure data set.
    pub figure_points: usize,
}

impl RunConfig {
    /// Window for a sweep point with the given parameters.
    pub fn window_for(&self, params: &NetworkParams) -> Result<Window, AnalyticError> {
        let guard = match self.guard_margin {
            Some(g) => g,
            None => truncation_horizon(params, DEFAULT_TAIL_TOL)?,
        };
        Ok(self.window.with_guard(guard))
    }

    pub const DEFAULT_WINDOW: f64 = 1000.0;
    pub const DEFAULT_REPS: u64 = 10_000;
    pub const DEFAULT_TAU: f64 = 1e7;
    pub const DEFAULT_RESOLUTION: f64 = 10.0;
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

struct Entries<'a> {
    map: BTreeMap<&'a str, Entry<'a>>,
}

impl<'a> Entries<'a> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.map.get(key).map_or(0, |e| e.line),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).map(|e| e.value)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.err(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = self.parse::<f64>(key)?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(self.err(key, "value must be finite"));
            }
        }
        Ok(v)
    }

    fn non_negative(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = self.number(key)?;
        if let Some(x) = v {
            if x < 0.0 {
                return Err(self.err(key, format!("must be non-negative, got {x}")));
            }
        }
        Ok(v)
    }

    fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = self.number(key)?;
        if let Some(x) = v {
            if !(x > 0.0) {
                return Err(self.err(key, format!("must be positive, got {x}")));
            }
        }
        Ok(v)
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<T>()
                    .map_err(|e| self.err(key, format!("cannot parse list item `{item}`: {e}")))
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    fn fractions(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let v = self.list::<f64>(key)?;
        if let Some(items) = &v {
            if let Some(bad) = items.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                return Err(self.err(key, format!("fractions must lie in [0, 1], got {bad}")));
            }
        }
        Ok(v)
    }

    fn grid(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let parts: Vec<&str> = v.split(':').map(str::trim).collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| self.err(key, format!("cannot parse `{s}`: {e}")))
        };
        let count = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| self.err(key, format!("cannot parse point count `{s}`: {e}")))
        };
        let grid = match parts.as_slice() {
            [single] if !single.is_empty() => self.list::<f64>(key)?.unwrap_or_default(),
            [lo, hi, n] => linear_grid(num(lo)?, num(hi)?, count(n)?).map_err(|e| self.err(key, e.to_string()))?,
            ["log", lo, hi, n] => log_grid(num(lo)?, num(hi)?, count(n)?).map_err(|e| self.err(key, e.to_string()))?,
            _ => return Err(self.err(key, "expected a list, `lo:hi:n` or `log:lo:hi:n`")),
        };
        if grid.is_empty() {
            return Err(self.err(key, "grid is empty"));
        }
        if grid.iter().any(|x| !x.is_finite()) {
            return Err(self.err(key, "grid values must be finite"));
        }
        if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(self.err(key, format!("grid is not strictly increasing at position {}", i + 1)));
        }
        Ok(Some(grid))
    }
}

fn split_entries(text: &str) -> Result<Entries<'_>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError {
                line,
                key: content.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError {
                line,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError {
                line,
                key: key.to_string(),
                message: "missing value".into(),
            });
        }
        if let Some(prev) = map.insert(key, Entry { line, value }) {
            return Err(ConfigError {
                line,
                key: key.to_string(),
                message: format!("duplicate key (first set on line {})", prev.line),
            });
        }
    }
    Ok(Entries { map })
}

fn meta_distribution(e: &Entries<'_>) -> Result<MetaSurfaceDistribution, ConfigError> {
    let forms = ["meta_fixed", "meta_support", "meta_uniform"];
    let given: Vec<&str> = forms.iter().copied().filter(|k| e.has(k)).collect();
    if given.len() > 1 {
        return Err(e.err(given[1], format!("conflicts with `{}`", given[0])));
    }
    if e.has("meta_probs") && !e.has("meta_support") {
        return Err(e.err("meta_probs", "requires `meta_support`"));
    }
    if let Some(m) = e.parse::<u32>("meta_fixed")? {
        return MetaSurfaceDistribution::fixed(m).map_err(|err| e.err("meta_fixed", err.to_string()));
    }
    if let Some(range) = e.raw("meta_uniform") {
        let parse = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|err| e.err("meta_uniform", format!("cannot parse `{s}`: {err}")))
        };
        let Some((lo, hi)) = range.split_once(':') else {
            return Err(e.err("meta_uniform", "expected `lo:hi`"));
        };
        return MetaSurfaceDistribution::uniform(parse(lo)?, parse(hi)?)
            .map_err(|err| e.err("meta_uniform", err.to_string()));
    }
    if let Some(support) = e.list::<u32>("meta_support")? {
        let probs = match e.list::<f64>("meta_probs")? {
            Some(p) => p,
            None => return Err(e.err("meta_probs", "required with `meta_support`")),
        };
        return MetaSurfaceDistribution::new(support, probs).map_err(|err| e.err("meta_support", err.to_string()));
    }
    Ok(MetaSurfaceDistribution::default())
}

fn params_key(err: &ParamError) -> &'static str {
    match err {
        ParamError::NegativeDensity { name, .. } => name,
        ParamError::FractionOutOfRange(_) => "mu",
        ParamError::LengthRange { .. } => "len_min",
        ParamError::LengthMean { .. } => "mean_len",
        ParamError::PathLossExponent(_) => "alpha",
        ParamError::MetaDistribution(_) => "meta_support",
    }
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = split_entries(text)?;

    let lambda_b = e
        .non_negative("lambda_b")?
        .ok_or_else(|| e.err("lambda_b", "required key is missing"))?;
    let mu = e.number("mu")?.unwrap_or(0.0);
    let mut params = NetworkParams::new(lambda_b, mu);
    if let Some(v) = e.non_negative("lambda_bs")? {
        params.lambda_bs = v;
    }
    if let Some(v) = e.non_negative("lambda_u")? {
        params.lambda_u = v;
    }
    if let Some(v) = e.number("alpha")? {
        params.alpha = v;
    }
    let mean = e.positive("mean_len")?;
    let lo = e.positive("len_min")?;
    let hi = e.positive("len_max")?;
    match (mean, lo, hi) {
        (_, Some(_), None) => return Err(e.err("len_max", "required when `len_min` is set")),
        (_, None, Some(_)) => return Err(e.err("len_min", "required when `len_max` is set")),
        (Some(m), None, None) => {
            params.mean_len = m;
            (params.len_min, params.len_max) = default_length_range(m);
        }
        (m, Some(a), Some(b)) => {
            params.len_min = a;
            params.len_max = b;
            params.mean_len = m.unwrap_or(0.5 * (a + b));
        }
        (None, None, None) => {}
    }
    params.meta_dist = meta_distribution(&e)?;
    params.validate().map_err(|err| {
        let key = params_key(&err);
        // report the meta key that was actually used
        let key = if key == "meta_support" {
            ["meta_support", "meta_fixed", "meta_uniform"]
                .into_iter()
                .find(|k| e.has(k))
                .unwrap_or(key)
        } else {
            key
        };
        e.err(key, err.to_string())
    })?;

    let window_size = e.positive("window_size")?.unwrap_or(RunConfig::DEFAULT_WINDOW);
    let guard_margin = e.non_negative("guard_margin")?;
    let guard = match guard_margin {
        Some(g) => g,
        None => truncation_horizon(&params, DEFAULT_TAIL_TOL).map_err(|err| e.err("lambda_bs", err.to_string()))?,
    };
    let window = Window::centered_square(window_size, guard).map_err(|err| e.err("window_size", err.to_string()))?;

    let seeds = e.list::<u64>("seeds")?.unwrap_or_else(|| vec![1]);
    if seeds.is_empty() {
        return Err(e.err("seeds", "at least one seed is needed"));
    }

    let sweep = match (e.parse::<SweepVar>("sweep")?, e.grid("grid")?) {
        (Some(var), Some(grid)) => {
            let bad = match var {
                SweepVar::Mu => grid.iter().find(|v| !(0.0..=1.0).contains(*v)),
                SweepVar::LambdaB => grid.iter().find(|v| **v < 0.0),
                SweepVar::Tau | SweepVar::R | SweepVar::X => grid.iter().find(|v| !(**v > 0.0)),
            };
            if let Some(v) = bad {
                return Err(e.err("grid", format!("value {v} is out of range for `{var}`")));
            }
            Some(Sweep { var, grid })
        }
        (Some(_), None) => return Err(e.err("grid", "required when `sweep` is set")),
        (None, Some(_)) => return Err(e.err("sweep", "required when `grid` is set")),
        (None, None) => None,
    };

    let mode = match e.raw("mode") {
        Some(m) => m.parse::<Mode>().map_err(|err| e.err("mode", err.to_string()))?,
        None => Mode::Independent,
    };
    let n_reps = e.parse::<u64>("n_reps")?.unwrap_or(RunConfig::DEFAULT_REPS);
    if n_reps < crate::montecarlo::MIN_REPLICATIONS {
        return Err(e.err(
            "n_reps",
            format!(
                "at least {} replications are needed",
                crate::montecarlo::MIN_REPLICATIONS
            ),
        ));
    }
    let ci_level = e.number("ci_level")?.unwrap_or(0.99);
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(e.err("ci_level", format!("must lie in (0, 1), got {ci_level}")));
    }
    let tau = e.positive("tau")?.unwrap_or(RunConfig::DEFAULT_TAU);
    let raster_resolution = e
        .positive("raster_resolution")?
        .unwrap_or(RunConfig::DEFAULT_RESOLUTION);
    if raster_resolution > window_size {
        return Err(e.err("raster_resolution", "larger than the window"));
    }
    let raster_mus = e.fractions("raster_mus")?.unwrap_or_else(|| vec![0.0, 0.05, 0.1, 0.4]);
    let figure_lambda_bs = e
        .list::<f64>("figure_lambda_bs")?
        .unwrap_or_else(|| vec![300.0, 500.0, 700.0]);
    if let Some(bad) = figure_lambda_bs.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(e.err("figure_lambda_bs", format!("densities must be non-negative, got {bad}")));
    }
    let figure_mus = e
        .fractions("figure_mus")?
        .unwrap_or_else(|| vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0]);
    let figure_curve_mus = e.fractions("figure_curve_mus")?.unwrap_or_else(|| vec![0.0, 0.1, 0.5]);
    let figure_points = e.parse::<usize>("figure_points")?.unwrap_or(20);
    if figure_points < 2 {
        return Err(e.err("figure_points", "at least 2 points are needed"));
    }
    for key in ["raster_mus", "figure_mus", "figure_curve_mus", "figure_lambda_bs"] {
        let v = match key {
            "raster_mus" => &raster_mus,
            "figure_mus" => &figure_mus,
            "figure_curve_mus" => &figure_curve_mus,
            _ => &figure_lambda_bs,
        };
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(e.err(key, "values must be strictly increasing"));
        }
    }

    Ok(RunConfig {
        params,
        window,
        guard_margin,
        seeds,
        sweep,
        mode,
        n_reps,
        output_dir: PathBuf::from(e.raw("output_dir").unwrap_or("out")),
        ci_level,
        tau,
        raster_resolution,
        raster_mus,
        figure_lambda_bs,
        figure_mus,
        figure_curve_mus,
        figure_points,
    })
}
