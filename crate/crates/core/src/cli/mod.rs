//! Command-line runners: analytic sweeps, Monte Carlo estimates, validation,
//! blind-spot rasters and the figure data set.
//!
//! Every CSV starts with `#` comment lines carrying the config hash and the
//! seed list, followed by the column-name row. Floats use shortest round-trip
//! formatting, so reruns with the same config are bit-identical.

pub mod config;
mod figures;

pub use config::{parse_config, ConfigError, RunConfig, Sweep, SweepVar};

use crate::analytic::{
    curve::CurveTable, deployment_efficiency_from, format_float, AnalyticError, Association, Model, NetworkParams,
};
use crate::montecarlo::{
    build_realization, estimate_metrics, raster_blind_map, Estimate, Metric, Mode, MonteCarloError, SimConfig,
};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("unknown subcommand `{0}`")]
    UnknownSubcommand(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Analytic,
    Simulate,
    Validate,
    Raster,
    Figures,
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subcommand::Analytic => "analytic",
            Subcommand::Simulate => "simulate",
            Subcommand::Validate => "validate",
            Subcommand::Raster => "raster",
            Subcommand::Figures => "figures",
        })
    }
}

impl FromStr for Subcommand {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "analytic" => Subcommand::Analytic,
            "simulate" => Subcommand::Simulate,
            "validate" => Subcommand::Validate,
            "raster" => Subcommand::Raster,
            "figures" => Subcommand::Figures,
            other => return Err(CliError::UnknownSubcommand(other.to_string())),
        })
    }
}

/// Command-line values that replace config-file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub ci_level: Option<f64>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        let flag_error = |key: &str, message: String| ConfigError {
            line: 0,
            key: key.to_string(),
            message,
        };
        if let Some(seed) = o.seed {
            self.seeds = vec![seed];
        }
        if let Some(reps) = o.reps {
            if reps < crate::montecarlo::MIN_REPLICATIONS {
                return Err(flag_error(
                    "reps",
                    format!(
                        "at least {} replications are needed",
                        crate::montecarlo::MIN_REPLICATIONS
                    ),
                ));
            }
            self.n_reps = reps;
        }
        if let Some(mode) = o.mode {
            self.mode = mode;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(ci) = o.ci_level {
            if !(ci > 0.0 && ci < 1.0) {
                return Err(flag_error("ci", format!("must lie in (0, 1), got {ci}")));
            }
            self.ci_level = ci;
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration, independent of the output
    /// directory.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(format!("{c:?}").as_bytes()))
    }

    fn header(&self) -> Vec<String> {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        vec![
            format!("config_sha256={}", self.digest()),
            format!("seeds={}", seeds.join(";")),
        ]
    }
}

/// Files written by a run and the number of failed validation rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub failures: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures > 0 {
            2
        } else {
            0
        }
    }
}

pub fn run(sub: Subcommand, config: &RunConfig) -> Result<Outcome, CliError> {
    fs::create_dir_all(&config.output_dir).map_err(|source| CliError::Io {
        path: config.output_dir.clone(),
        source,
    })?;
    match sub {
        Subcommand::Analytic => run_analytic(config),
        Subcommand::Simulate => run_estimates(config, false),
        Subcommand::Validate => run_estimates(config, true),
        Subcommand::Raster => run_raster(config),
        Subcommand::Figures => figures::run_figures(config),
    }
}

/// Comment lines, column names and rows joined into one CSV document.
pub(crate) fn csv_document(header: &[String], columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out: Vec<u8> = header.iter().flat_map(|h| format!("# {h}\n").into_bytes()).collect();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        // writes into memory cannot fail
        w.write_record(columns).expect("in-memory write");
        for row in rows {
            w.write_record(row).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    String::from_utf8(out).expect("UTF-8 fields")
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str, outcome: &mut Outcome) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    outcome.files.push(path);
    Ok(())
}

/// Parameters at one sweep point.
fn params_at(base: &NetworkParams, sweep: Option<&Sweep>, value: f64) -> NetworkParams {
    match sweep.map(|s| s.var) {
        Some(SweepVar::Mu) => base.clone().with_mu(value),
        Some(SweepVar::LambdaB) => base.clone().with_lambda_b(value),
        _ => base.clone(),
    }
}

/// Metrics reported at one sweep point.
fn metrics_at(sweep: Option<&Sweep>, value: f64, tau: f64) -> Vec<Metric> {
    match sweep.map(|s| s.var) {
        Some(SweepVar::R) => vec![Metric::PLos(value), Metric::PIndirect(value), Metric::PVisible(value)],
        Some(SweepVar::X) => vec![Metric::ShortestPathCdf(value), Metric::IndirectCdf(value)],
        Some(SweepVar::Tau) => vec![Metric::Coverage(value)],
        _ => vec![
            Metric::BlindSpot,
            Metric::DirectAssociation,
            Metric::IndirectAssociation,
            Metric::Coverage(tau),
        ],
    }
}

/// Analytic engine with the association triple computed at most once.
struct Evaluator {
    model: Model,
    association: OnceLock<Association>,
}

impl Evaluator {
    fn new(params: &NetworkParams) -> Result<Self, AnalyticError> {
        Ok(Self {
            model: Model::new(params)?,
            association: OnceLock::new(),
        })
    }

    fn association(&self) -> Result<Association, AnalyticError> {
        if let Some(a) = self.association.get() {
            return Ok(*a);
        }
        let a = self.model.association_probabilities()?;
        Ok(*self.association.get_or_init(|| a))
    }

    fn value(&self, metric: Metric) -> Result<f64, AnalyticError> {
        let m = &self.model;
        match metric {
            Metric::PLos(r) => m.p_los(r),
            Metric::PIndirect(r) => m.indirect_path_probability(r),
            Metric::PVisible(r) => m.visibility_probability(r),
            Metric::ShortestPathCdf(x) => m.shortest_path_cdf(x),
            Metric::IndirectCdf(x) => m.indirect_distance_cdf(x, None),
            Metric::DirectAssociation => Ok(self.association()?.direct),
            Metric::IndirectAssociation => Ok(self.association()?.indirect),
            Metric::BlindSpot => m.blind_spot_fraction(),
            Metric::Coverage(tau) => m.coverage_probability(tau),
        }
    }
}

fn grid_of(config: &RunConfig) -> Vec<f64> {
    config.sweep.as_ref().map_or_else(|| vec![f64::NAN], |s| s.grid.clone())
}

fn run_analytic(config: &RunConfig) -> Result<Outcome, CliError> {
    let sweep = config.sweep.as_ref();
    let grid = grid_of(config);
    let header = config.header();
    let mut outcome = Outcome::default();
    // (metric name, value) per grid point
    let points: Vec<Vec<(String, f64)>> = grid
        .par_iter()
        .map(|&v| -> Result<Vec<(String, f64)>, AnalyticError> {
            let params = params_at(&config.params, sweep, v);
            let eval = Evaluator::new(&params)?;
            let mut out = Vec::new();
            for metric in metrics_at(sweep, v, config.tau) {
                out.push((metric.name().to_string(), eval.value(metric)?));
            }
            match sweep.map(|s| s.var) {
                Some(SweepVar::X) => out.insert(0, ("f_rd".into(), eval.model.direct_distance_distribution(v)?.cdf)),
                Some(SweepVar::R) => {}
                Some(SweepVar::Tau) => {}
                _ => {
                    let a = eval.association()?;
                    out.push(("eta".into(), deployment_efficiency_from(&params, a.indirect)));
                }
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;

    let Some(sweep) = sweep else {
        let rows: Vec<Vec<String>> = points[0]
            .iter()
            .map(|(name, value)| vec![name.clone(), format_float(*value)])
            .collect();
        let mut head = header.clone();
        head.push(format!("tau={}", config.tau));
        let doc = csv_document(&head, &["metric", "value"], &rows);
        write_file(&config.output_dir, "analytic_summary.csv", &doc, &mut outcome)?;
        return Ok(outcome);
    };
    for (k, (name, _)) in points[0].iter().enumerate() {
        let y: Vec<f64> = points.iter().map(|p| p[k].1).collect();
        let table = CurveTable::new(sweep.grid.clone(), y).map_err(|e| ConfigError {
            line: 0,
            key: "grid".into(),
            message: e.to_string(),
        })?;
        let mut doc: String = header.iter().map(|h| format!("# {h}\n")).collect();
        doc.push_str(&table.to_csv(sweep.var.name(), name));
        write_file(
            &config.output_dir,
            &format!("analytic_{}_{}.csv", sweep.var, name),
            &doc,
            &mut outcome,
        )?;
    }
    Ok(outcome)
}

fn estimate_row(seed: u64, sweep: Option<&Sweep>, value: f64, metric: Metric, e: &Estimate) -> Vec<String> {
    let mut row = vec![seed.to_string()];
    if sweep.is_some() {
        row.push(format_float(value));
    }
    row.extend([
        metric.name().to_string(),
        metric.argument().map_or_else(String::new, format_float),
        format_float(e.mean),
        format_float(e.ci_low),
        format_float(e.ci_high),
        e.n.to_string(),
        e.mode.to_string(),
    ]);
    row
}

fn run_estimates(config: &RunConfig, validate: bool) -> Result<Outcome, CliError> {
    let sweep = config.sweep.as_ref();
    let grid = grid_of(config);
    let analytic: Vec<Vec<f64>> = if validate {
        grid.par_iter()
            .map(|&v| {
                let eval = Evaluator::new(&params_at(&config.params, sweep, v))?;
                metrics_at(sweep, v, config.tau)
                    .into_iter()
                    .map(|m| eval.value(m))
                    .collect::<Result<Vec<f64>, AnalyticError>>()
            })
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };

    let mut rows = Vec::new();
    let mut failures = 0;
    for &seed in &config.seeds {
        for (i, &v) in grid.iter().enumerate() {
            let params = params_at(&config.params, sweep, v);
            let sim = SimConfig {
                window: config.window_for(&params)?,
                params,
                n_reps: config.n_reps,
                seed,
                mode: config.mode,
                ci_level: config.ci_level,
            };
            let metrics = metrics_at(sweep, v, config.tau);
            let estimates = estimate_metrics(&metrics, &sim)?;
            for (k, (metric, e)) in metrics.iter().zip(&estimates).enumerate() {
                let mut row = estimate_row(seed, sweep, v, *metric, e);
                if validate {
                    let a = analytic[i][k];
                    let pass = e.contains(a);
                    failures += usize::from(!pass);
                    row.push(format_float(a));
                    row.push(pass.to_string());
                }
                rows.push(row);
            }
        }
    }

    let mut columns = vec!["seed"];
    if let Some(s) = sweep {
        columns.push(s.var.name());
    }
    columns.extend(["metric", "argument", "mean", "ci_low", "ci_high", "n", "mode"]);
    if validate {
        columns.extend(["analytic", "pass"]);
    }
    let mut header = config.header();
    header.push(format!("ci_level={}", config.ci_level));
    let mut outcome = Outcome {
        files: Vec::new(),
        failures,
    };
    let name = if validate { "validate.csv" } else { "simulate.csv" };
    write_file(
        &config.output_dir,
        name,
        &csv_document(&header, &columns, &rows),
        &mut outcome,
    )?;
    Ok(outcome)
}

fn run_raster(config: &RunConfig) -> Result<Outcome, CliError> {
    let header = config.header();
    let window = config.window_for(&config.params)?;
    let mut outcome = Outcome::default();
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let base = build_realization(&config.params, &window, seed)?;
        for &mu in &config.raster_mus {
            let map = raster_blind_map(&base.with_mu(mu)?, config.raster_resolution)?;
            let mut comments = header.clone();
            comments.push(format!("seed={seed} mu={mu} resolution_m={}", config.raster_resolution));
            write_file(
                &config.output_dir,
                &format!("raster_seed{seed}_mu{mu}.pgm"),
                &map.to_pgm(&comments),
                &mut outcome,
            )?;
            rows.push(vec![
                seed.to_string(),
                format_float(mu),
                map.width.to_string(),
                map.height.to_string(),
                map.blind_count().to_string(),
                format_float(map.blind_fraction()),
            ]);
        }
    }
    let doc = csv_document(
        &header,
        &["seed", "mu", "width", "height", "blind_cells", "blind_fraction"],
        &rows,
    );
    write_file(&config.output_dir, "raster_summary.csv", &doc, &mut outcome)?;
    Ok(outcome)
}
