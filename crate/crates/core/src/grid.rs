//! Low-discrepancy sample grids in a disc.

use crate::expr::C64;
use serde::Serialize;
use std::f64::consts::PI;

pub const DEFAULT_COUNT: usize = 64;
pub const DEFAULT_RADIUS: f64 = 0.9;
pub const DEFAULT_SEED: u64 = 1;

/// Halton points in `|z| ≤ radius`, area-uniform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleGrid {
    pub count: usize,
    pub radius: f64,
    /// Index offset into the Halton sequence.
    pub seed: u64,
    #[serde(skip)]
    pub points: Vec<C64>,
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

impl SampleGrid {
    pub fn new(count: usize, radius: f64, seed: u64) -> Self {
        let points = (0..count as u64)
            .map(|k| {
                let i = k + seed;
                let rho = radius * halton(i, 2).sqrt();
                C64::from_polar(rho, 2.0 * PI * halton(i, 3))
            })
            .collect();
        SampleGrid { count, radius, seed, points }
    }
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid::new(DEFAULT_COUNT, DEFAULT_RADIUS, DEFAULT_SEED)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inside_radius_and_distinct() {
        let g = SampleGrid::default();
        assert_eq!(g.points.len(), 64);
        assert!(g.points.iter().all(|z| z.norm() <= 0.9));
        for i in 0..g.points.len() {
            for j in 0..i {
                assert!((g.points[i] - g.points[j]).norm() > 1e-3);
            }
        }
        assert_eq!(g, SampleGrid::default());
    }

    #[test]
    fn halton_prefix() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(2, 3) - 2.0 / 3.0).abs() < 1e-15);
    }
}
