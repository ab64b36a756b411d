//! Stochastic-geometry engine for RIS-assisted cellular networks with
//! random line blockages.

// `!(x > 0.0)` deliberately rejects NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod geometry;
pub mod montecarlo;
pub mod quadrature;
