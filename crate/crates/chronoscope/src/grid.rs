//! Uniform frequency grids, their dual time grids and generic uniform axes.

use serde::{Deserialize, Serialize};

use crate::error::{ChronoError, Result};

/// Uniformly sampled frequency axis. Point `n` sits at
/// `center + (n - count/2) * spacing`, so the center is always an exact
/// grid point (count is even).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    count: usize,
    center: f64,
    spacing: f64,
}

impl FrequencyGrid {
    /// Build a grid of `count` points covering `span` around `center`.
    /// Spacing is `span / count`.
    pub fn new(count: usize, center: f64, span: f64) -> Result<Self> {
        if count < 4 || count % 2 != 0 {
            return Err(ChronoError::InvalidGrid(format!(
                "count must be even and >= 4, got {count}"
            )));
        }
        if !(span > 0.0) || !span.is_finite() {
            return Err(ChronoError::InvalidGrid(format!(
                "span must be positive and finite, got {span}"
            )));
        }
        Ok(Self {
            count,
            center,
            spacing: span / count as f64,
        })
    }

    pub fn from_spacing(count: usize, center: f64, spacing: f64) -> Result<Self> {
        Self::new(count, center, spacing * count as f64)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn span(&self) -> f64 {
        self.spacing * self.count as f64
    }

    pub fn point(&self, n: usize) -> f64 {
        self.center + (n as f64 - self.count as f64 / 2.0) * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |n| self.point(n))
    }

    pub fn min(&self) -> f64 {
        self.point(0)
    }

    pub fn max(&self) -> f64 {
        self.point(self.count - 1)
    }

    /// Fractional index of frequency `omega` on this grid.
    pub fn index_of(&self, omega: f64) -> f64 {
        (omega - self.center) / self.spacing + self.count as f64 / 2.0
    }

    /// Conjugate time grid: spacing `2*pi/(N*spacing)`, centered at 0.
    pub fn dual_time_grid(&self) -> TimeGrid {
        TimeGrid {
            count: self.count,
            spacing: 2.0 * std::f64::consts::PI / (self.count as f64 * self.spacing),
        }
    }

    pub fn axis(&self) -> Axis {
        Axis {
            start: self.min(),
            step: self.spacing,
            count: self.count,
        }
    }
}

/// Dual of a [`FrequencyGrid`]: uniform time-of-arrival samples centered at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    count: usize,
    spacing: f64,
}

impl TimeGrid {
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn point(&self, n: usize) -> f64 {
        (n as f64 - self.count as f64 / 2.0) * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |n| self.point(n))
    }

    pub fn span(&self) -> f64 {
        self.spacing * self.count as f64
    }

    pub fn axis(&self) -> Axis {
        Axis {
            start: self.point(0),
            step: self.spacing,
            count: self.count,
        }
    }
}

/// A generic uniform axis for phase-space maps: `value(i) = start + i*step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    /// Symmetric axis of `count` points covering `[-half_span, half_span]`
    /// around `center`.
    pub fn symmetric(center: f64, half_span: f64, count: usize) -> Self {
        assert!(count >= 2, "axis needs at least two points");
        let step = 2.0 * half_span / (count as f64 - 1.0);
        Axis {
            start: center - half_span,
            step,
            count,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.value(i))
    }

    pub fn end(&self) -> f64 {
        self.value(self.count - 1)
    }

    /// Index of the axis point closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.start) / self.step).round();
        (i.max(0.0) as usize).min(self.count - 1)
    }
}
