//! Blind-spot maps over the measurement window.

use super::realization::{covered_in_view, Realization, UserView};
use super::MonteCarloError;
use crate::geometry::Point2;
use rayon::prelude::*;
use std::fmt::Write as _;

/// Row-major coverage grid; row 0 is the top edge of the window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindMap {
    pub width: usize,
    pub height: usize,
    /// `true` where the cell center is covered.
    pub covered: Vec<bool>,
}

impl BlindMap {
    pub fn blind_count(&self) -> usize {
        self.covered.iter().filter(|c| !**c).count()
    }

    pub fn blind_fraction(&self) -> f64 {
        self.blind_count() as f64 / self.covered.len() as f64
    }

    /// ASCII PGM: 0 = blind, 255 = covered. Each `comments` entry becomes a
    /// `#` line after the magic number.
    pub fn to_pgm(&self, comments: &[String]) -> String {
        let mut out = String::from("P2\n");
        for c in comments {
            for line in c.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "{} {}\n255", self.width, self.height);
        for row in self.covered.chunks(self.width) {
            let line: Vec<&str> = row.iter().map(|&c| if c { "255" } else { "0" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Classifies each cell center of the window as covered or blind.
pub fn raster_blind_map(realization: &Realization, resolution: f64) -> Result<BlindMap, MonteCarloError> {
    let w = &realization.window;
    if !(resolution > 0.0) || resolution > w.width() || resolution > w.height() {
        return Err(MonteCarloError::InvalidResolution(resolution));
    }
    let width = (w.width() / resolution).round().max(1.0) as usize;
    let height = (w.height() / resolution).round().max(1.0) as usize;
    let (dx, dy) = (w.width() / width as f64, w.height() / height as f64);
    let covered: Vec<bool> = (0..width * height)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % width, k / width);
            let u = Point2::new(w.x_min + (i as f64 + 0.5) * dx, w.y_max - (j as f64 + 0.5) * dy);
            covered_in_view(&mut UserView::new(u, realization))
        })
        .collect();
    Ok(BlindMap { width, height, covered })
}
