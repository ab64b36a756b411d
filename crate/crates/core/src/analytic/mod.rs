//! Analytic performance metrics of an RIS-assisted cellular network under
//! the line Boolean blockage model.
//!
//! Every quantity is an integral over the plane around the typical user at
//! the origin. The building block is the *reflection mass*
//! `∬ a_i(r, t, φ) t dt dφ`: the mean number of RISs able to bridge a
//! blocked user–BS pair at distance `r`, optionally restricted to indirect
//! paths shorter than a given length. Two independent routes evaluate it:
//!
//! * the polar route integrates `a_i` directly over `(t, φ)`, with the
//!   per-angle upper limit `(x² − r²) / (2(x − r cos φ))` when the path
//!   length is capped at `x`;
//! * the elliptic route changes variables to confocal ellipses around the
//!   user and BS. Both LoS factors collapse into `e^{−β s}` on the ellipse
//!   of path length `s`, leaving a smooth 2D integral that needs no radial
//!   truncation inside the region.
//!
//! Single-point operations use the polar route; nested integrals (the
//! shortest-indirect-path CDF, `H(x)`, association and coverage) use the
//! elliptic route because it is several times cheaper per evaluation.

pub mod curve;
pub mod params;

pub use curve::{format_float, linear_grid, log_grid, CurveError, CurveTable};
pub use params::{default_length_range, MetaSurfaceDistribution, NetworkParams, ParamError};

use crate::quadrature::{truncation_radius, Quadrature, QuadratureError, RadialLimit, DEFAULT_TAIL_TOL};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Slack allowed on an arccos argument before it is treated as bad geometry.
const ACOS_SLACK: f64 = 1e-12;
/// Largest negative `A_i` that is still attributed to integration error.
const ASSOCIATION_SLACK: f64 = 1e-5;
/// Multiple of the truncation radius that stands in for "infinity".
pub const INFINITY_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("{name} out of domain: {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("orientation cosine {0} lies outside [-1, 1] beyond rounding")]
    OrientationOutOfRange(f64),
    #[error("meta-surface count {0} is not in the support")]
    UnknownMetaCount(u32),
    #[error("association probabilities inconsistent: A_i = {0}")]
    Inconsistent(f64),
}

type Result<T> = std::result::Result<T, AnalyticError>;

fn domain(name: &'static str, value: f64) -> AnalyticError {
    AnalyticError::Domain { name, value }
}

/// Blockage rate `β = 2 λ_b E[L] / π` in 1/m.
pub fn blockage_rate(params: &NetworkParams) -> f64 {
    2.0 * params.lambda_b_m2() * params.mean_len / PI
}

/// Probability that a link of length `r` meters is unblocked.
pub fn p_los(r: f64, beta: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(domain("r", r));
    }
    if !(beta >= 0.0) {
        return Err(domain("beta", beta));
    }
    Ok((-beta * r).exp())
}

/// Reflection probability of one RIS and its orientation factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    /// `a_i(r, t, φ)`.
    pub probability: f64,
    /// `C(r, t, φ)`: probability that user and BS fall on the same side of
    /// a uniformly oriented host line.
    pub orientation: f64,
}

/// `a_i(r, t, φ)` for a BS at distance `r`, an RIS at distance `t`, and
/// angle `φ` between the two directions as seen from the user.
pub fn reflection_probability(r: f64, t: f64, phi: f64, beta: f64) -> Result<Reflection> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(domain("r", r));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain("t", t));
    }
    if !phi.is_finite() {
        return Err(domain("phi", phi));
    }
    if !(beta >= 0.0) {
        return Err(domain("beta", beta));
    }
    let cos_phi = phi.cos();
    let d2 = r * r + t * t - 2.0 * r * t * cos_phi;
    let (d, orientation) = if d2 <= 0.0 {
        // RIS on top of the BS: the angle at the RIS tends to π/2
        (0.0, 0.5)
    } else {
        let d = d2.sqrt();
        let arg = (t - r * cos_phi) / d;
        if arg.abs() > 1.0 + ACOS_SLACK {
            return Err(AnalyticError::OrientationOutOfRange(arg));
        }
        (d, 1.0 - arg.clamp(-1.0, 1.0).acos() / PI)
    };
    Ok(Reflection {
        probability: 0.5 * (-beta * t).exp() * (-beta * d).exp() * orientation,
        orientation,
    })
}

/// Unchecked `a_i` used inside the polar quadrature.
#[inline]
fn reflection_kernel(beta: f64, r: f64, t: f64, cos_phi: f64) -> f64 {
    let d2 = r * r + t * t - 2.0 * r * t * cos_phi;
    if d2 <= 0.0 {
        return 0.25 * (-beta * t).exp();
    }
    let d = d2.sqrt();
    let c = 1.0 - ((t - r * cos_phi) / d).clamp(-1.0, 1.0).acos() / PI;
    0.5 * (-beta * (t + d)).exp() * c
}

/// Orientation factor integrated against the ellipse Jacobian, in units
/// where the user–BS distance is 1: `∫_0^π C(θ) t_n d_n dθ` on the ellipse
/// of normalised path length `σ`, where `t_n d_n = (σ² − cos²θ) / 4` and the
/// angle at the RIS satisfies `cos ψ = (σ² + cos²θ − 2) / (σ² − cos²θ)`.
#[inline]
fn ellipse_orientation_integrand(sigma2: f64, theta: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    let den = sigma2 - c2;
    if den <= 0.0 {
        return 0.0;
    }
    let cos_psi = ((sigma2 + c2 - 2.0) / den).clamp(-1.0, 1.0);
    (1.0 - cos_psi.acos() / PI) * 0.25 * den
}

/// `∫_0^x e^{−βr} r dr`, stable for small `βx`.
pub fn los_mass(beta: f64, x: f64) -> f64 {
    let u = beta * x;
    if u < 0.05 {
        // Σ_{n≥2} (−1)^n (n−1) u^n / n!, divided by β², written in x
        let mut term = x * x / 2.0;
        let mut sum = term;
        for n in 3..=14 {
            term *= -u / n as f64;
            sum += term * (n - 1) as f64;
        }
        return sum;
    }
    (-(-u).exp_m1() - u * (-u).exp()) / (beta * beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectDistance {
    pub cdf: f64,
    pub pdf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Association {
    /// `A_d`: served over a direct LoS link.
    pub direct: f64,
    /// `A_i`: served through an RIS.
    pub indirect: f64,
    /// `ℰ`: blind spot.
    pub blind: f64,
}

/// Integration tolerances of the analytic engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: crate::quadrature::DEFAULT_REL_TOL,
            abs: crate::quadrature::DEFAULT_ABS_TOL,
            tail: DEFAULT_TAIL_TOL,
        }
    }
}

/// Which evaluation of the reflection mass to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassRoute {
    Polar,
    Elliptic,
}

/// Analytic engine bound to one parameter set.
#[derive(Debug, Clone)]
pub struct Model {
    params: NetworkParams,
    beta: f64,
    lambda_bs: f64,
    lambda_r: f64,
    horizon: f64,
    quad: Quadrature,
}

impl Model {
    pub fn new(params: &NetworkParams) -> Result<Self> {
        Self::with_tolerances(params, Tolerances::default())
    }

    pub fn with_tolerances(params: &NetworkParams, tol: Tolerances) -> Result<Self> {
        params.validate()?;
        let beta = blockage_rate(params);
        let lambda_bs = params.lambda_bs_m2();
        let horizon = truncation_horizon(params, tol.tail)?;
        Ok(Self {
            params: params.clone(),
            beta,
            lambda_bs,
            lambda_r: params.lambda_r_m2(),
            horizon,
            quad: Quadrature::new(tol.rel, tol.abs).parallel(true),
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Truncation radius of the radial integrals, meters.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Stand-in for an infinite distance argument.
    pub fn infinity(&self) -> f64 {
        INFINITY_FACTOR * self.horizon
    }

    pub fn p_los(&self, r: f64) -> Result<f64> {
        p_los(r, self.beta)
    }

    fn p_nlos_unchecked(&self, r: f64) -> f64 {
        -(-self.beta * r).exp_m1()
    }

    pub fn reflection(&self, r: f64, t: f64, phi: f64) -> Result<Reflection> {
        reflection_probability(r, t, phi, self.beta)
    }

    /// `∬ a_i t dt dφ` over all RIS positions whose indirect path is shorter
    /// than `max_path` (unrestricted when `None`).
    pub fn reflection_mass(&self, r: f64, max_path: Option<f64>, route: MassRoute) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(domain("r", r));
        }
        if let Some(x) = max_path {
            if !(x >= 0.0) {
                return Err(domain("x", x));
            }
        }
        self.mass_with(r, max_path, route, self.quad)
    }

    fn mass_with(&self, r: f64, max_path: Option<f64>, route: MassRoute, q: Quadrature) -> Result<f64> {
        match route {
            MassRoute::Polar => self.mass_polar(r, max_path, q),
            MassRoute::Elliptic => self.mass_elliptic(r, max_path, q),
        }
    }

    fn mass_polar(&self, r: f64, max_path: Option<f64>, q: Quadrature) -> Result<f64> {
        let beta = self.beta;
        let cap = r + self.horizon;
        let kernel = |t: f64, phi: f64| reflection_kernel(beta, r, t, phi.cos());
        let res = match max_path {
            Some(x) if x <= r => return Ok(0.0),
            Some(x) if x < cap => {
                let limit = move |phi: f64| {
                    let den = 2.0 * (x - r * phi.cos());
                    if den <= 0.0 {
                        0.0
                    } else {
                        ((x * x - r * r) / den).min(cap)
                    }
                };
                q.polar(kernel, RadialLimit::PerAngle(&limit), true, &[r])?
            }
            _ => q.polar(kernel, RadialLimit::Fixed(cap), true, &[r])?,
        };
        Ok(res.value)
    }

    fn mass_elliptic(&self, r: f64, max_path: Option<f64>, q: Quadrature) -> Result<f64> {
        let cap = r + self.horizon;
        let y = max_path.map_or(cap, |x| x.min(cap));
        if y <= r {
            return Ok(0.0);
        }
        let v_max = (y / r - 1.0).sqrt();
        let br = self.beta * r;
        let angular = q.tighter(10.0);
        let radial = |v: f64| -> Result<f64> {
            let sigma = 1.0 + v * v;
            let decay = (-br * sigma).exp();
            if decay == 0.0 {
                return Ok(0.0);
            }
            let sigma2 = sigma * sigma;
            // integrand is symmetric about θ = π/2
            let theta = angular.integrate(|th| ellipse_orientation_integrand(sigma2, th), 0.0, FRAC_PI_2)?;
            Ok(decay * 4.0 * theta.value / (2.0 + v * v).sqrt())
        };
        let res = q.tighter(10.0).try_integrate(radial, &[0.0, v_max])?;
        Ok(r * r * res.value)
    }

    /// `P_I(r)`: probability that at least one RIS can bridge a BS at `r`.
    pub fn indirect_path_probability(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(domain("r", r));
        }
        self.indirect_path_probability_with(r, self.quad)
    }

    fn indirect_path_probability_with(&self, r: f64, q: Quadrature) -> Result<f64> {
        if self.lambda_r == 0.0 {
            return Ok(0.0);
        }
        let mass = self.mass_with(r, None, MassRoute::Polar, q)?;
        Ok(-(-self.lambda_r * mass).exp_m1())
    }

    /// `P_v(r) = P_LoS(r) + P_NLoS(r) P_I(r)`.
    pub fn visibility_probability(&self, r: f64) -> Result<f64> {
        self.visibility_probability_with(r, self.quad)
    }

    fn visibility_probability_with(&self, r: f64, q: Quadrature) -> Result<f64> {
        let los = self.p_los(r)?;
        if r == 0.0 || self.lambda_r == 0.0 {
            return Ok(los);
        }
        Ok(los + (1.0 - los) * self.indirect_path_probability_with(r, q)?)
    }

    /// Density of visible BSs at distance `r`, per km².
    pub fn visible_bs_density(&self, r: f64) -> Result<f64> {
        Ok(self.params.lambda_bs * self.visibility_probability(r)?)
    }

    /// `ℰ`, the average fraction of the plane with no direct or indirect LoS.
    pub fn blind_spot_fraction(&self) -> Result<f64> {
        if self.lambda_bs == 0.0 {
            return Ok(1.0);
        }
        if self.beta == 0.0 {
            return Ok(0.0);
        }
        let inner = self.quad.tighter(10.0);
        let integral = self.quad.try_integrate(
            |r| Ok::<_, AnalyticError>(self.visibility_probability_with(r, inner)? * r),
            &[0.0, self.horizon],
        )?;
        Ok((-2.0 * PI * self.lambda_bs * integral.value).exp())
    }

    /// CDF and PDF of the distance to the nearest LoS BS.
    pub fn direct_distance_distribution(&self, x: f64) -> Result<DirectDistance> {
        if !(x >= 0.0) {
            return Err(domain("x", x));
        }
        let exponent = 2.0 * PI * self.lambda_bs * los_mass(self.beta, x);
        Ok(DirectDistance {
            cdf: -(-exponent).exp_m1(),
            pdf: 2.0 * PI * self.lambda_bs * x * (-self.beta * x - exponent).exp(),
        })
    }

    fn rho(&self, k: u32) -> Result<f64> {
        self.params
            .meta_dist
            .iter()
            .find(|(m, _)| *m == k)
            .map(|(_, p)| p)
            .ok_or(AnalyticError::UnknownMetaCount(k))
    }

    /// `F_{R_{i,k}|r}(x)`: shortest indirect path through an RIS with `k`
    /// meta-surfaces, for a BS at distance `r`.
    pub fn conditional_indirect_cdf(&self, x: f64, r: f64, k: u32) -> Result<f64> {
        let rho = self.rho(k)?;
        let log_survival = self.conditional_log_survival(x, r, MassRoute::Polar)?;
        Ok(-(rho * log_survival).exp_m1())
    }

    /// `F_{R_i|r}(x) = 1 − Π_k (1 − F_{R_{i,k}|r}(x))`, summed in log space.
    pub fn conditional_indirect_cdf_any(&self, x: f64, r: f64) -> Result<f64> {
        let log_survival = self.conditional_log_survival(x, r, MassRoute::Polar)?;
        let total: f64 = self.params.meta_dist.probs().iter().map(|rho| rho * log_survival).sum();
        Ok(-total.exp_m1())
    }

    /// `−λ_R · mass(r, x)`, the log-survival of all RIS classes combined
    /// before weighting by `ρ_k`.
    fn conditional_log_survival(&self, x: f64, r: f64, route: MassRoute) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("x", x));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(domain("r", r));
        }
        if x <= r || self.lambda_r == 0.0 {
            return Ok(0.0);
        }
        Ok(-self.lambda_r * self.reflection_mass(r, Some(x), route)?)
    }

    /// `F_{R_{i,k}}(x)` when `k` is given, else `F_{R_i}(x)`.
    pub fn indirect_distance_cdf(&self, x: f64, k: Option<u32>) -> Result<f64> {
        Ok(-(-self.indirect_exponent(x, k, self.quad)?).exp_m1())
    }

    /// `2π λ_BS ∫_0^x P_NLoS(r) F_{·|r}(x) r dr`.
    fn indirect_exponent(&self, x: f64, k: Option<u32>, quad: Quadrature) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("x", x));
        }
        let weight = match k {
            Some(k) => self.rho(k)?,
            None => 1.0,
        };
        if x == 0.0 || self.lambda_r == 0.0 || self.lambda_bs == 0.0 {
            return Ok(0.0);
        }
        let inner = quad.tighter(10.0);
        let integrand = |r: f64| -> Result<f64> {
            if r >= x {
                return Ok(0.0);
            }
            let mass = self.mass_elliptic(r, Some(x), inner)?;
            let cdf = -(-weight * self.lambda_r * mass).exp_m1();
            Ok(self.p_nlos_unchecked(r) * cdf * r)
        };
        let upper = x.min(self.horizon);
        let res = quad.try_integrate(integrand, &[0.0, upper])?;
        Ok(2.0 * PI * self.lambda_bs * res.value)
    }

    /// `F_W(x) = 1 − (1 − F_{R_d}(x))(1 − F_{R_i}(x))`.
    pub fn shortest_path_cdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("x", x));
        }
        let direct = 2.0 * PI * self.lambda_bs * los_mass(self.beta, x);
        let indirect = self.indirect_exponent(x, None, self.quad)?;
        Ok(-(-(direct + indirect)).exp_m1())
    }

    /// `H(x)`: probability that no NLoS BS offers an indirect path-loss below `x^α`.
    pub fn h_function(&self, x: f64) -> Result<f64> {
        Ok((-self.h_exponent(x, self.quad)?).exp())
    }

    fn h_exponent(&self, x: f64, quad: Quadrature) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("x", x));
        }
        if x == 0.0 || self.lambda_r == 0.0 || self.lambda_bs == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.params.alpha;
        let classes: Vec<(f64, f64)> = self
            .params
            .meta_dist
            .iter()
            .map(|(k, rho)| (x * (k as f64).powf(2.0 / alpha), rho))
            .collect();
        let reach = classes.iter().map(|c| c.0).fold(0.0, f64::max);
        let upper = reach.min(self.horizon);
        let mut points = vec![0.0];
        let mut breaks: Vec<f64> = classes.iter().map(|c| c.0).filter(|&b| b < upper).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        points.extend(breaks);
        points.push(upper);
        let inner = quad.tighter(10.0);
        let integrand = |r: f64| -> Result<f64> {
            let mut log_survival = 0.0;
            for &(limit, rho) in &classes {
                if r < limit {
                    log_survival -= rho * self.lambda_r * self.mass_elliptic(r, Some(limit), inner)?;
                }
            }
            Ok(self.p_nlos_unchecked(r) * -log_survival.exp_m1() * r)
        };
        let res = quad.try_integrate(integrand, &points)?;
        Ok(2.0 * PI * self.lambda_bs * res.value)
    }

    /// `(A_d, A_i, ℰ)`. `A_i` is recovered as `1 − ℰ − A_d`.
    pub fn association_probabilities(&self) -> Result<Association> {
        let blind = self.blind_spot_fraction()?;
        if self.lambda_r == 0.0 || self.lambda_bs == 0.0 {
            // H ≡ 1, so A_d = F_{R_d}(∞) = 1 − ℰ
            return Ok(Association {
                direct: 1.0 - blind,
                indirect: 0.0,
                blind,
            });
        }
        let inner = self.quad.tighter(10.0);
        let integrand = |x: f64| -> Result<f64> {
            let pdf = self.direct_distance_distribution(x)?.pdf;
            if pdf == 0.0 {
                return Ok(0.0);
            }
            Ok(pdf * (-self.h_exponent(x, inner)?).exp())
        };
        let direct = self.quad.try_integrate(integrand, &[0.0, self.horizon])?.value;
        let mut indirect = 1.0 - blind - direct;
        if indirect < 0.0 {
            if indirect < -ASSOCIATION_SLACK {
                return Err(AnalyticError::Inconsistent(indirect));
            }
            indirect = 0.0;
        }
        Ok(Association {
            direct: 1.0 - blind - indirect,
            indirect,
            blind,
        })
    }

    /// `η = min{1, λ_u A_i / λ_R}`; zero when no RIS is deployed.
    pub fn deployment_efficiency(&self) -> Result<f64> {
        if self.lambda_r == 0.0 {
            return Ok(0.0);
        }
        let a = self.association_probabilities()?;
        Ok(deployment_efficiency_from(&self.params, a.indirect))
    }

    /// `P_cov(τ) = 1 − F̄_{R_d}(τ^{1/α}) H(τ^{1/α})`.
    pub fn coverage_probability(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0) {
            return Err(domain("tau", tau));
        }
        let x = tau.powf(1.0 / self.params.alpha);
        let direct = 2.0 * PI * self.lambda_bs * los_mass(self.beta, x);
        let indirect = self.h_exponent(x, self.quad)?;
        Ok(-(-(direct + indirect)).exp_m1())
    }
}

/// `η` from a known `A_i`.
pub fn deployment_efficiency_from(params: &NetworkParams, a_indirect: f64) -> f64 {
    let lambda_r = params.lambda_r();
    if lambda_r == 0.0 {
        return 0.0;
    }
    (params.lambda_u * a_indirect / lambda_r).min(1.0)
}

/// Radius beyond which BSs and RISs contribute less than `tail_tol` to the
/// radial integrals, meters.
pub fn truncation_horizon(params: &NetworkParams, tail_tol: f64) -> Result<f64> {
    let beta = blockage_rate(params);
    let lambda_bs = params.lambda_bs_m2();
    if beta > 0.0 {
        Ok(truncation_radius(beta, tail_tol)?)
    } else if lambda_bs > 0.0 {
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(QuadratureError::InvalidTailTolerance(tail_tol).into());
        }
        // no blockages: the nearest-BS void probability sets the scale
        Ok((-tail_tol.ln() / (PI * lambda_bs)).sqrt())
    } else {
        Ok(1.0)
    }
}

/// Evaluates `f` on every grid point (in parallel) into a curve.
pub fn tabulate<F>(grid: &[f64], f: F) -> Result<CurveTable>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let y: Vec<f64> = grid.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
    CurveTable::new(grid.to_vec(), y).map_err(domain_curve)
}

fn domain_curve(e: CurveError) -> AnalyticError {
    match e {
        CurveError::NotIncreasing(i) => domain("grid index", i as f64),
        CurveError::LengthMismatch { x, .. } => domain("grid length", x as f64),
        CurveError::BadGrid(_) => domain("grid", f64::NAN),
    }
}
