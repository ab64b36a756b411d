//! Monte Carlo estimation of the analytic metrics.
//!
//! Two blocking modes are supported. `Geometric` samples explicit blockage
//! segments and decides LoS by segment intersection, so links that share
//! blockages are correlated. `Independent` draws every LoS indicator as an
//! independent Bernoulli with success probability `e^{−β·length}` and gives
//! every BS its own RIS field, which is exactly the model the analytic
//! formulas describe.

mod independent;
pub mod raster;
pub mod realization;
pub mod stats;

pub use raster::{raster_blind_map, BlindMap};
pub use realization::{
    associate_user, build_realization, indirect_feasible, is_covered, los_clear, AssociationOutcome, BlockageEntity,
    LinkTag, Realization, RisAttachment, SegmentIndex,
};
pub use stats::{z_score, Estimate, MIN_REPLICATIONS};

use crate::analytic::{blockage_rate, truncation_horizon, AnalyticError, NetworkParams, ParamError};
use crate::geometry::{GeometryError, Point2, Window};
use crate::quadrature::DEFAULT_TAIL_TOL;
use independent::IndependentWorld;
use rayon::prelude::*;
use realization::{associate_in_view, covered_in_view, path_within, UserView};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("at least {min} replications are needed, got {0}", min = MIN_REPLICATIONS)]
    TooFewReplications(u64),
    #[error("{successes} successes out of {n} trials")]
    InvalidCount { successes: u64, n: u64 },
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidCiLevel(f64),
    #[error("raster resolution {0} m does not fit the window")]
    InvalidResolution(f64),
    #[error("{name} must be positive and finite, got {value}")]
    InvalidArgument { name: &'static str, value: f64 },
    #[error("unknown mode `{0}` (expected geometric or independent)")]
    UnknownMode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Geometric,
    Independent,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Geometric => "geometric",
            Mode::Independent => "independent",
        })
    }
}

impl FromStr for Mode {
    type Err = MonteCarloError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geometric" => Ok(Mode::Geometric),
            "independent" => Ok(Mode::Independent),
            other => Err(MonteCarloError::UnknownMode(other.to_string())),
        }
    }
}

/// Quantities that can be estimated; arguments in meters or path-loss units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    /// LoS probability of a link of the given length.
    PLos(f64),
    /// Some RIS bridges a BS at the given distance.
    PIndirect(f64),
    /// A BS at the given distance is visible directly or through an RIS.
    PVisible(f64),
    /// Shortest LoS path (direct or indirect) is at most `x`.
    ShortestPathCdf(f64),
    /// Shortest indirect path through an NLoS BS is at most `x`.
    IndirectCdf(f64),
    /// Served directly.
    DirectAssociation,
    /// Served through an RIS.
    IndirectAssociation,
    /// No direct or indirect LoS BS.
    BlindSpot,
    /// Serving path-loss is at most `τ`.
    Coverage(f64),
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::PLos(_) => "p_los",
            Metric::PIndirect(_) => "p_i",
            Metric::PVisible(_) => "p_v",
            Metric::ShortestPathCdf(_) => "f_w",
            Metric::IndirectCdf(_) => "f_ri",
            Metric::DirectAssociation => "a_d",
            Metric::IndirectAssociation => "a_i",
            Metric::BlindSpot => "blind",
            Metric::Coverage(_) => "p_cov",
        }
    }

    pub fn argument(&self) -> Option<f64> {
        match *self {
            Metric::PLos(v)
            | Metric::PIndirect(v)
            | Metric::PVisible(v)
            | Metric::ShortestPathCdf(v)
            | Metric::IndirectCdf(v)
            | Metric::Coverage(v) => Some(v),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), MonteCarloError> {
        if let Some(v) = self.argument() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MonteCarloError::InvalidArgument {
                    name: self.name(),
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Whether the metric needs a full realization around the user.
    fn needs_scene(&self) -> bool {
        !matches!(self, Metric::PLos(_))
    }
}

/// Everything an estimation run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: NetworkParams,
    /// Geometric mode only; the user sits at its center.
    pub window: Window,
    pub n_reps: u64,
    pub seed: u64,
    pub mode: Mode,
    pub ci_level: f64,
}

impl SimConfig {
    /// Unit-square-kilometer window with the truncation radius as guard.
    pub fn new(params: NetworkParams, n_reps: u64, seed: u64, mode: Mode) -> Result<Self, MonteCarloError> {
        let guard = truncation_horizon(&params, DEFAULT_TAIL_TOL)?;
        Ok(Self {
            window: Window::centered_square(1000.0, guard)?,
            params,
            n_reps,
            seed,
            mode,
            ci_level: 0.99,
        })
    }
}

/// Mixes a base seed with a path of indices into a new 64-bit seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(base), |h, &p| mix(h ^ mix(p)))
}

pub fn estimate_metric(metric: Metric, config: &SimConfig) -> Result<Estimate, MonteCarloError> {
    Ok(estimate_metrics(&[metric], config)?.remove(0))
}

/// Estimates several metrics from the same replications.
pub fn estimate_metrics(metrics: &[Metric], config: &SimConfig) -> Result<Vec<Estimate>, MonteCarloError> {
    config.params.validate()?;
    config.window.validate()?;
    for m in metrics {
        m.validate()?;
    }
    if config.n_reps < MIN_REPLICATIONS {
        return Err(MonteCarloError::TooFewReplications(config.n_reps));
    }
    z_score(config.ci_level)?;
    let beta = blockage_rate(&config.params);
    let horizon = truncation_horizon(&config.params, DEFAULT_TAIL_TOL)?;
    let zero = || vec![0u64; metrics.len()];
    let counts = (0..config.n_reps)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(config.seed, &[rep]);
            match config.mode {
                Mode::Independent => Ok(independent_indicators(metrics, config, beta, horizon, seed)),
                Mode::Geometric => geometric_indicators(metrics, config, seed),
            }
        })
        .try_fold(zero, |mut acc, hits: Result<Vec<bool>, MonteCarloError>| {
            for (a, h) in acc.iter_mut().zip(hits?) {
                *a += h as u64;
            }
            Ok::<_, MonteCarloError>(acc)
        })
        .try_reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            Ok(a)
        })?;
    counts
        .into_iter()
        .map(|k| Estimate::from_counts(k, config.n_reps, config.ci_level, config.mode))
        .collect()
}

fn independent_indicators(metrics: &[Metric], config: &SimConfig, beta: f64, horizon: f64, seed: u64) -> Vec<bool> {
    let world = IndependentWorld::new(&config.params, beta, horizon, seed);
    let mut served: Option<Option<independent::Served>> = None;
    metrics
        .iter()
        .map(|m| match *m {
            Metric::PLos(r) => world.p_los(r),
            Metric::PIndirect(r) => world.p_indirect(r),
            Metric::PVisible(r) => world.p_visible(r),
            Metric::ShortestPathCdf(x) => world.path_within(x, false),
            Metric::IndirectCdf(x) => world.path_within(x, true),
            Metric::BlindSpot => world.blind(),
            Metric::Coverage(tau) => world.covered(tau),
            Metric::DirectAssociation | Metric::IndirectAssociation => {
                let s = *served.get_or_insert_with(|| world.associate());
                match (m, s) {
                    (Metric::DirectAssociation, Some(s)) => !s.indirect,
                    (Metric::IndirectAssociation, Some(s)) => s.indirect,
                    _ => false,
                }
            }
        })
        .collect()
}

fn geometric_indicators(metrics: &[Metric], config: &SimConfig, seed: u64) -> Result<Vec<bool>, MonteCarloError> {
    let params = &config.params;
    let scene = if metrics.iter().any(Metric::needs_scene) {
        Some(build_realization(params, &config.window, seed)?)
    } else {
        None
    };
    let center = config.window.center();
    let mut association: Option<AssociationOutcome> = None;
    let mut out = Vec::with_capacity(metrics.len());
    for (i, m) in metrics.iter().enumerate() {
        let hit = match *m {
            Metric::PLos(r) => {
                // only blockages with a midpoint within L_max/2 of the link can touch it
                let local = Window::new(0.0, r, -0.5, 0.5, 0.5 * params.len_max)?;
                let real = build_realization(params, &local, derive_seed(seed, &[i as u64]))?;
                los_clear(Point2::new(0.0, 0.0), Point2::new(r, 0.0), &real, None)
            }
            Metric::PIndirect(r) | Metric::PVisible(r) => {
                let mut real = scene.clone().expect("scene built");
                let y = center.offset(r, 0.0);
                real.bs = vec![y];
                let direct = matches!(m, Metric::PVisible(_)) && los_clear(center, y, &real, None);
                direct || {
                    let mut view = UserView::new(center, &real);
                    let ris: Vec<usize> = view.ris_order().iter().map(|&(_, k)| k).collect();
                    ris.into_iter().any(|k| view.reflect(k, y))
                }
            }
            Metric::ShortestPathCdf(x) | Metric::IndirectCdf(x) => {
                let real = scene.as_ref().expect("scene built");
                path_within(&mut UserView::new(center, real), x, matches!(m, Metric::IndirectCdf(_)))
            }
            Metric::BlindSpot => {
                let real = scene.as_ref().expect("scene built");
                !covered_in_view(&mut UserView::new(center, real))
            }
            Metric::DirectAssociation | Metric::IndirectAssociation | Metric::Coverage(_) => {
                let real = scene.as_ref().expect("scene built");
                let a = *association.get_or_insert_with(|| associate_in_view(&mut UserView::new(center, real)));
                match *m {
                    Metric::DirectAssociation => a.tag == LinkTag::Direct,
                    Metric::IndirectAssociation => a.tag == LinkTag::Indirect,
                    Metric::Coverage(tau) => a.path_loss.is_some_and(|pl| pl <= tau),
                    _ => unreachable!(),
                }
            }
        };
        out.push(hit);
    }
    Ok(out)
}
