//! Dyadic time grids and sampled paths.
//!
//! Every path in the crate lives on a uniform dyadic grid
//! `{ i T / 2^L : i = 0..2^L }`. A sampled path is interpreted as the
//! step function equal to `values[i]` on `[t_i, t_{i+1})`; all `L^p`
//! quadrature uses this left-endpoint rule, which is exact for the
//! dyadic step functions produced by Haar expansions and jump paths.

use crate::error::{Error, Result};
use crate::math::Kahan;

/// Uniform dyadic grid on `[0, T]` with `2^levels + 1` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    levels: u32,
}

impl TimeGrid {
    pub fn new(horizon: f64, levels: u32) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if levels > 26 {
            return Err(Error::Domain(format!("grid level {levels} too large (max 26)")));
        }
        Ok(Self { horizon, levels })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Number of grid intervals, `2^levels`.
    pub fn intervals(&self) -> usize {
        1usize << self.levels
    }

    /// Number of grid points, `2^levels + 1`.
    pub fn points(&self) -> usize {
        self.intervals() + 1
    }

    /// Grid spacing `T / 2^levels`.
    pub fn step(&self) -> f64 {
        self.horizon / self.intervals() as f64
    }

    /// The i-th grid time.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }
}

/// A process trajectory sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl PathSample {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::Domain(format!(
                "path needs {} values for level {}, got {}",
                grid.points(),
                grid.levels(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("path values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: TimeGrid, f: F) -> Result<Self> {
        let values = (0..grid.points()).map(|i| f(grid.time(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `|X|_{L^p_T}` by the left-endpoint rule (the final grid point is
    /// Lebesgue-null and does not enter).
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p > 0.0, "lp_norm needs p > 0");
        let h = self.grid.step();
        let mut acc = Kahan::new();
        for &v in &self.values[..self.grid.intervals()] {
            acc.add(v.abs().powf(p) * h);
        }
        acc.total().powf(1.0 / p)
    }

    /// `|X - Y|_{L^p_T}` on a shared grid.
    pub fn lp_distance(&self, other: &PathSample, p: f64) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Domain("lp_distance needs matching grids".into()));
        }
        let h = self.grid.step();
        let mut acc = Kahan::new();
        for (a, b) in self.values[..self.grid.intervals()]
            .iter()
            .zip(&other.values[..self.grid.intervals()])
        {
            acc.add((a - b).abs().powf(p) * h);
        }
        Ok(acc.total().powf(1.0 / p))
    }
}
