//! The figure data set: one CSV per figure, analytic values only.
//!
//! | file | content |
//! |------|---------|
//! | fig4 | `P_LoS(r)`, `P_v(r)` per `λ_b`, `μ` |
//! | fig5 | `ℰ` vs `μ` per `λ_b` |
//! | fig6 | `F_{R_d}`, `F_{R_i}`, `F_W` vs `x` per `λ_b`, `μ` |
//! | fig7 | `A_i`, `η` vs `μ` per `λ_b`, `M` |
//! | fig8 | `P_cov(τ)` vs `μ` per `λ_b`, `M = 1` |
//! | fig9 | `P_cov(τ)` vs `μ` per `λ_b`, `M ∈ {1, 2, 3}` |
//! | fig10 | `P_cov(τ)` for fixed `M_F ∈ {2, 3}` vs uniform `M` with mean `M_F` |

use super::{csv_document, write_file, CliError, Outcome, RunConfig};
use crate::analytic::{
    deployment_efficiency_from, format_float, AnalyticError, MetaSurfaceDistribution, Model, NetworkParams,
};
use rayon::prelude::*;

const FIG4_R_MAX: f64 = 500.0;
const FIG6_X_MAX: f64 = 1000.0;
const META_COUNTS: [u32; 3] = [1, 2, 3];
const META_MEANS: [u32; 2] = [2, 3];

type Rows = Vec<Vec<String>>;

fn fmt_row(cells: &[f64]) -> Vec<String> {
    cells.iter().map(|&v| format_float(v)).collect()
}

/// `n` equally spaced points in `(0, hi]`.
fn curve_grid(hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| hi * i as f64 / n as f64).collect()
}

/// Evaluates `f` on every `(outer, inner)` pair in parallel, preserving order.
fn sweep<A: Sync, B: Sync, F>(outer: &[A], inner: &[B], f: F) -> Result<Rows, CliError>
where
    F: Fn(&A, &B) -> Result<Vec<Vec<f64>>, AnalyticError> + Sync,
{
    let pairs: Vec<(&A, &B)> = outer.iter().flat_map(|a| inner.iter().map(move |b| (a, b))).collect();
    let blocks: Vec<Vec<Vec<f64>>> = pairs.par_iter().map(|(a, b)| f(a, b)).collect::<Result<_, _>>()?;
    Ok(blocks.into_iter().flatten().map(|r| fmt_row(&r)).collect())
}

fn with_meta(base: &NetworkParams, lambda_b: f64, meta: MetaSurfaceDistribution) -> NetworkParams {
    base.clone().with_lambda_b(lambda_b).with_meta(meta)
}

fn fixed(m: u32) -> MetaSurfaceDistribution {
    MetaSurfaceDistribution::fixed(m).expect("positive count")
}

pub(super) fn run_figures(config: &RunConfig) -> Result<Outcome, CliError> {
    let base = &config.params;
    let lambdas = &config.figure_lambda_bs;
    let mus = &config.figure_mus;
    let curve_mus = &config.figure_curve_mus;
    let n = config.figure_points;
    let tau = config.tau;
    let mut header = config.header();
    header.push(format!("tau={tau} alpha={} lambda_bs={}", base.alpha, base.lambda_bs));
    let mut outcome = Outcome::default();
    let mut emit = |name: &str, columns: &[&str], rows: &Rows| {
        write_file(
            &config.output_dir,
            name,
            &csv_document(&header, columns, rows),
            &mut outcome,
        )
    };

    let r_grid = curve_grid(FIG4_R_MAX, n);
    let rows = sweep(lambdas, curve_mus, |&lb, &mu| {
        let model = Model::new(&base.clone().with_lambda_b(lb).with_mu(mu))?;
        r_grid
            .iter()
            .map(|&r| Ok(vec![lb, mu, r, model.p_los(r)?, model.visibility_probability(r)?]))
            .collect()
    })?;
    emit("fig4.csv", &["lambda_b", "mu", "r", "p_los", "p_v"], &rows)?;

    let rows = sweep(lambdas, mus, |&lb, &mu| {
        let p = base.clone().with_lambda_b(lb).with_mu(mu);
        Ok(vec![vec![lb, mu, p.lambda_r(), Model::new(&p)?.blind_spot_fraction()?]])
    })?;
    emit("fig5.csv", &["lambda_b", "mu", "lambda_r", "blind"], &rows)?;

    let x_grid = curve_grid(FIG6_X_MAX, n);
    let rows = sweep(lambdas, curve_mus, |&lb, &mu| {
        let model = Model::new(&base.clone().with_lambda_b(lb).with_mu(mu))?;
        x_grid
            .iter()
            .map(|&x| {
                let f_rd = model.direct_distance_distribution(x)?.cdf;
                let f_ri = model.indirect_distance_cdf(x, None)?;
                Ok(vec![lb, mu, x, f_rd, f_ri, model.shortest_path_cdf(x)?])
            })
            .collect()
    })?;
    emit("fig6.csv", &["lambda_b", "mu", "x", "f_rd", "f_ri", "f_w"], &rows)?;

    let classes: Vec<(f64, u32)> = lambdas.iter().flat_map(|&lb| META_COUNTS.map(|m| (lb, m))).collect();
    let rows = sweep(&classes, mus, |&(lb, m), &mu| {
        let p = with_meta(base, lb, fixed(m)).with_mu(mu);
        let a = Model::new(&p)?.association_probabilities()?;
        let eta = deployment_efficiency_from(&p, a.indirect);
        Ok(vec![vec![lb, m as f64, mu, a.direct, a.indirect, a.blind, eta]])
    })?;
    emit(
        "fig7.csv",
        &["lambda_b", "m", "mu", "a_d", "a_i", "blind", "eta"],
        &rows,
    )?;

    let rows = sweep(&classes, mus, |&(lb, m), &mu| {
        let p = with_meta(base, lb, fixed(m)).with_mu(mu);
        Ok(vec![vec![lb, m as f64, mu, Model::new(&p)?.coverage_probability(tau)?]])
    })?;
    let fig8: Rows = rows
        .iter()
        .filter(|r| r[1] == "1")
        .map(|r| {
            let mut r = r.clone();
            r.remove(1);
            r
        })
        .collect();
    emit("fig8.csv", &["lambda_b", "mu", "p_cov"], &fig8)?;
    emit("fig9.csv", &["lambda_b", "m", "mu", "p_cov"], &rows)?;

    // uniform on {1, …, 2M_F − 1} has mean M_F
    let cases: Vec<(f64, u32, bool)> = lambdas
        .iter()
        .flat_map(|&lb| {
            META_MEANS
                .into_iter()
                .flat_map(move |m| [(lb, m, false), (lb, m, true)])
        })
        .collect();
    let rows: Rows = cases
        .par_iter()
        .map(|&(lb, m, uniform)| -> Result<Rows, AnalyticError> {
            let meta = if uniform {
                MetaSurfaceDistribution::uniform(1, 2 * m - 1)?
            } else {
                fixed(m)
            };
            let kind = if uniform { "uniform" } else { "fixed" };
            mus.iter()
                .map(|&mu| {
                    let p = with_meta(base, lb, meta.clone()).with_mu(mu);
                    let cov = Model::new(&p)?.coverage_probability(tau)?;
                    Ok(vec![
                        format_float(lb),
                        m.to_string(),
                        kind.to_string(),
                        format_float(mu),
                        format_float(cov),
                    ])
                })
                .collect()
        })
        .collect::<Result<Vec<Rows>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    emit("fig10.csv", &["lambda_b", "m_f", "meta", "mu", "p_cov"], &rows)?;
    Ok(outcome)
}
