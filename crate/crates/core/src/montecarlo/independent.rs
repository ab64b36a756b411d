//! Simulation under the independent-blocking assumption.
//!
//! Each BS link is LoS with probability `e^{−βr}` independently of all other
//! links, and each NLoS BS sees its own Poisson field of RISs whose two
//! reflection legs are LoS independently with probabilities `e^{−βt}` and
//! `e^{−βd}`. RISs are drawn from a dominating intensity that upper-bounds
//! `λ_R e^{−β(t+d)}` and thinned to it exactly:
//!
//! * inside the disk `t ≤ r` the bound is `e^{−βr}` (since `t + d ≥ r`);
//! * outside it is `e^{−β(2t−r)}` (since `d ≥ t − r`), whose radial law is
//!   a mixture of an exponential and a gamma(2) variable shifted by `r`.
//!
//! The host line orientation and the coated side stay geometric, so the side
//! test reproduces the orientation factor exactly.

use super::derive_seed;
use crate::analytic::NetworkParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use std::f64::consts::{PI, TAU};

const BS_STREAM: u64 = u64::MAX;
const TEST_STREAM: u64 = u64::MAX - 1;

pub(crate) struct IndependentWorld<'a> {
    params: &'a NetworkParams,
    beta: f64,
    lambda_bs: f64,
    lambda_r: f64,
    horizon: f64,
    seed: u64,
}

/// Best association found for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Served {
    pub indirect: bool,
    pub path_loss: f64,
}

impl<'a> IndependentWorld<'a> {
    /// `seed` is the replication seed; `horizon` bounds the BS process.
    pub fn new(params: &'a NetworkParams, beta: f64, horizon: f64, seed: u64) -> Self {
        Self {
            params,
            beta,
            lambda_bs: params.lambda_bs_m2(),
            lambda_r: params.lambda_r_m2(),
            horizon,
            seed,
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[stream]))
    }

    /// BS distances in increasing order out to the horizon.
    fn bs_distances(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        let mut rng = self.rng(BS_STREAM);
        let mut area = 0.0;
        let scale = PI * self.lambda_bs;
        let unit = Exp::new(1.0).expect("unit rate");
        let active = self.lambda_bs > 0.0;
        (0u64..)
            .map(move |k| {
                area += unit.sample(&mut rng);
                (k, (area / scale).sqrt())
            })
            .take_while(move |&(_, r)| active && r <= self.horizon)
    }

    /// LoS state of a BS at distance `r`, and the generator for its RIS field.
    fn bs_link(&self, stream: u64, r: f64) -> (bool, ChaCha8Rng) {
        let mut rng = self.rng(stream);
        let los = rng.random::<f64>() < (-self.beta * r).exp();
        (los, rng)
    }

    /// Visits every feasible indirect path `(length, M)` of an NLoS BS at
    /// distance `r` until `visit` returns true; returns whether it did.
    fn paths<F: FnMut(f64, u32) -> bool>(&self, r: f64, rng: &mut ChaCha8Rng, mut visit: F) -> bool {
        if self.lambda_r == 0.0 || self.beta == 0.0 {
            return false;
        }
        let beta = self.beta;
        let envelope = (-beta * r).exp();
        let inner_mean = self.lambda_r * envelope * PI * r * r;
        let outer_mean = self.lambda_r * envelope * TAU * (1.0 + 2.0 * beta * r) / (4.0 * beta * beta);
        let n_inner = poisson(inner_mean, rng);
        let n_outer = poisson(outer_mean, rng);
        let rate2 = Exp::new(2.0 * beta).expect("positive rate");
        let w_exp = r / (2.0 * beta);
        let w_gamma = 1.0 / (4.0 * beta * beta);
        let p_exp = w_exp / (w_exp + w_gamma);
        for i in 0..n_inner + n_outer {
            let (t, slack) = if i < n_inner {
                (r * rng.random::<f64>().sqrt(), r)
            } else {
                let s = if rng.random::<f64>() < p_exp {
                    rate2.sample(rng)
                } else {
                    rate2.sample(rng) + rate2.sample(rng)
                };
                let t = r + s;
                (t, 2.0 * t - r)
            };
            let phi = rng.random_range(-PI..PI);
            let (zx, zy) = (t * phi.cos(), t * phi.sin());
            let d = (zx - r).hypot(zy);
            let accept = rng.random::<f64>() < (-beta * (t + d - slack)).exp();
            let theta = rng.random_range(0.0..PI);
            let coated: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let m = self.params.meta_dist.sample(rng);
            if !accept || t <= 0.0 {
                continue;
            }
            let (dx, dy) = (theta.cos(), theta.sin());
            // sides of user (origin) and BS (r, 0) relative to the host line through z
            let side_u = dx * (0.0 - zy) - dy * (0.0 - zx);
            let side_y = dx * (0.0 - zy) - dy * (r - zx);
            if side_u * coated > 0.0 && side_y * coated > 0.0 && visit(t + d, m) {
                return true;
            }
        }
        false
    }

    pub fn p_los(&self, r: f64) -> bool {
        self.bs_link(TEST_STREAM, r).0
    }

    pub fn p_indirect(&self, r: f64) -> bool {
        let (_, mut rng) = self.bs_link(TEST_STREAM, r);
        self.paths(r, &mut rng, |_, _| true)
    }

    pub fn p_visible(&self, r: f64) -> bool {
        let (los, mut rng) = self.bs_link(TEST_STREAM, r);
        los || self.paths(r, &mut rng, |_, _| true)
    }

    /// Some LoS path (direct, or indirect through an NLoS BS) of length `≤ x`.
    pub fn path_within(&self, x: f64, indirect_only: bool) -> bool {
        for (k, r) in self.bs_distances() {
            if r > x {
                break;
            }
            let (los, mut rng) = self.bs_link(k, r);
            if los {
                if indirect_only {
                    continue;
                }
                return true;
            }
            if self.paths(r, &mut rng, |len, _| len <= x) {
                return true;
            }
        }
        false
    }

    pub fn blind(&self) -> bool {
        for (k, r) in self.bs_distances() {
            let (los, mut rng) = self.bs_link(k, r);
            if los || self.paths(r, &mut rng, |_, _| true) {
                return false;
            }
        }
        true
    }

    /// Minimum path-loss association; `None` for a blind user.
    pub fn associate(&self) -> Option<Served> {
        let alpha = self.params.alpha;
        let m_max = self.params.meta_dist.max() as f64;
        let gain_max = m_max * m_max;
        let mut best: Option<Served> = None;
        let mut best_pl = f64::INFINITY;
        for (k, r) in self.bs_distances() {
            if r.powf(alpha) / gain_max >= best_pl {
                break;
            }
            let (los, mut rng) = self.bs_link(k, r);
            if los {
                let pl = r.powf(alpha);
                if pl < best_pl {
                    best_pl = pl;
                    best = Some(Served {
                        indirect: false,
                        path_loss: pl,
                    });
                }
                continue;
            }
            self.paths(r, &mut rng, |len, m| {
                let pl = len.powf(alpha) / (m as f64).powi(2);
                if pl < best_pl {
                    best_pl = pl;
                    best = Some(Served {
                        indirect: true,
                        path_loss: pl,
                    });
                }
                false
            });
        }
        best
    }

    /// Some candidate with path-loss at most `tau`.
    pub fn covered(&self, tau: f64) -> bool {
        let alpha = self.params.alpha;
        let m_max = self.params.meta_dist.max() as f64;
        let gain_max = m_max * m_max;
        for (k, r) in self.bs_distances() {
            if r.powf(alpha) / gain_max > tau {
                break;
            }
            let (los, mut rng) = self.bs_link(k, r);
            if los {
                if r.powf(alpha) <= tau {
                    return true;
                }
                continue;
            }
            if self.paths(r, &mut rng, |len, m| len.powf(alpha) / (m as f64).powi(2) <= tau) {
                return true;
            }
        }
        false
    }
}

fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{blockage_rate, Model};

    /// Empirical mean number of feasible RIS paths for a BS at `r`, which
    /// must equal `λ_R ∬ a_i t dt dφ`.
    #[test]
    fn mean_feasible_count_matches_reflection_mass() {
        let params = NetworkParams::new(500.0, 0.2);
        let beta = blockage_rate(&params);
        let model = Model::new(&params).unwrap();
        let r = 150.0;
        let expected = params.lambda_r_m2()
            * model
                .reflection_mass(r, None, crate::analytic::MassRoute::Polar)
                .unwrap();
        let n = 40_000u64;
        let mut total = 0u64;
        for rep in 0..n {
            let world = IndependentWorld::new(&params, beta, 5000.0, derive_seed(17, &[rep]));
            let mut rng = world.rng(TEST_STREAM);
            world.paths(r, &mut rng, |_, _| {
                total += 1;
                false
            });
        }
        let mean = total as f64 / n as f64;
        // Poisson count: standard error sqrt(mean / n)
        let se = (expected / n as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn no_ris_means_no_paths() {
        let params = NetworkParams::new(500.0, 0.0);
        let world = IndependentWorld::new(&params, blockage_rate(&params), 5000.0, 1);
        assert!(!world.p_indirect(100.0));
        assert!(world.associate().is_none_or(|s| !s.indirect));
    }

    #[test]
    fn bs_distances_are_sorted_and_bounded() {
        let params = NetworkParams::new(500.0, 0.0);
        let world = IndependentWorld::new(&params, blockage_rate(&params), 2000.0, 5);
        let d: Vec<f64> = world.bs_distances().map(|(_, r)| r).collect();
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        assert!(d.iter().all(|&r| r <= 2000.0));
        // mean count π R² λ = 125.7
        assert!(d.len() > 60 && d.len() < 200);
    }
}
