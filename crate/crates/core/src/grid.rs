//! Uniform tensor grids shared by the deposition, convolution, and wave
//! machinery.
//!
//! Nodes on each axis sit at `min + i * spacing` for `i = 0..points`, with
//! `spacing = (max - min) / points`. The right endpoint is excluded, which is
//! the natural convention for periodic spectral work and harmless for the
//! free-space deposition grids (the support is required to stay inside the
//! box anyway).

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub points: usize,
    pub min: f64,
    pub max: f64,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / self.points as f64
    }

    pub fn extent(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    axes: Vec<Axis>,
    periodic: bool,
}

impl SpatialGrid {
    /// Build a grid from per-axis (min, max, points) triples.
    ///
    /// Point counts must be powers of two and at least 16 so every grid can
    /// be handed to the spectral solvers unchanged.
    pub fn new(axes: &[(f64, f64, usize)], periodic: bool) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(CoreError::invalid(
                "axes",
                format!("dimension must be 1..=3, got {}", axes.len()),
            ));
        }
        for &(min, max, points) in axes {
            if !(max > min) || !min.is_finite() || !max.is_finite() {
                return Err(CoreError::invalid(
                    "axes",
                    format!("axis bounds must satisfy min < max, got [{min}, {max}]"),
                ));
            }
            if points < 16 || !points.is_power_of_two() {
                return Err(CoreError::invalid(
                    "points",
                    format!("per-axis point count must be a power of two >= 16, got {points}"),
                ));
            }
        }
        Ok(SpatialGrid {
            axes: axes
                .iter()
                .map(|&(min, max, points)| Axis { points, min, max })
                .collect(),
            periodic,
        })
    }

    /// Symmetric box [-extent/2, extent/2) in every axis.
    pub fn centered(dimension: usize, extent: f64, points: usize, periodic: bool) -> Result<Self> {
        let spec: Vec<(f64, f64, usize)> =
            (0..dimension).map(|_| (-0.5 * extent, 0.5 * extent, points)).collect();
        SpatialGrid::new(&spec, periodic)
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|ax| ax.points).collect()
    }

    pub fn total_points(&self) -> usize {
        self.axes.iter().map(|ax| ax.points).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|ax| ax.spacing()).product()
    }

    /// Node positions along one axis.
    pub fn coords(&self, a: usize) -> Vec<f64> {
        let ax = &self.axes[a];
        let h = ax.spacing();
        (0..ax.points).map(|i| ax.min + h * i as f64).collect()
    }

    /// Signed spectral wavenumbers along one axis, FFT layout.
    pub fn wavenumbers(&self, a: usize) -> Vec<f64> {
        crate::fft::wavenumbers(self.axes[a].points, self.axes[a].extent())
    }

    /// Row-major flat index of a multi-index (axis 0 slowest).
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dimension());
        let mut idx = 0;
        for (a, &i) in multi.iter().enumerate() {
            debug_assert!(i < self.axes[a].points);
            idx = idx * self.axes[a].points + i;
        }
        idx
    }

    /// Coordinates of a flat node index.
    pub fn node_position(&self, mut flat: usize, out: &mut [f64]) {
        for a in (0..self.dimension()).rev() {
            let n = self.axes[a].points;
            let i = flat % n;
            flat /= n;
            out[a] = self.axes[a].min + self.axes[a].spacing() * i as f64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_bad_geometry() {
        assert!(SpatialGrid::new(&[(0.0, 1.0, 17)], true).is_err());
        assert!(SpatialGrid::new(&[(0.0, 1.0, 8)], true).is_err());
        assert!(SpatialGrid::new(&[(1.0, 0.0, 32)], true).is_err());
        assert!(SpatialGrid::new(&[], true).is_err());
        assert!(SpatialGrid::new(&[(0.0, 1.0, 32); 4], true).is_err());
        assert!(SpatialGrid::new(&[(0.0, 1.0, 32)], true).is_ok());
    }

    #[test]
    fn spacing_and_nodes_are_uniform() {
        let g = SpatialGrid::centered(1, 16.0, 64, true).unwrap();
        assert_abs_diff_eq!(g.axis(0).spacing(), 0.25);
        let xs = g.coords(0);
        assert_abs_diff_eq!(xs[0], -8.0);
        assert_abs_diff_eq!(xs[63], 8.0 - 0.25);
        for w in xs.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn flat_index_roundtrip_2d() {
        let g = SpatialGrid::new(&[(-1.0, 1.0, 16), (0.0, 4.0, 32)], false).unwrap();
        assert_eq!(g.total_points(), 512);
        let flat = g.flat_index(&[3, 5]);
        assert_eq!(flat, 3 * 32 + 5);
        let mut pos = [0.0; 2];
        g.node_position(flat, &mut pos);
        assert_abs_diff_eq!(pos[0], -1.0 + 0.125 * 3.0);
        assert_abs_diff_eq!(pos[1], 0.125 * 5.0);
    }
}
