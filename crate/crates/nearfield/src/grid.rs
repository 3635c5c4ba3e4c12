//! Uniform centered sample grids in one or two lateral dimensions.
//!
//! Sample positions on each axis are `x_j = (j - n/2) * spacing`, so the
//! origin is an explicit sample and grids pair naturally with the centered
//! discrete Fourier transform in [`crate::fft`]. The dual grid carries the
//! frequency samples `xi_l = (l - n/2) * 2*pi/(n*spacing)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAU: f64 = std::f64::consts::TAU;

/// Uniform centered grid with even sample counts, 1-D or 2-D.
///
/// Axis 0 is the slow (row) axis of row-major sample storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: Vec<usize>,
    spacing: Vec<f64>,
}

impl Grid {
    pub fn new(n: &[usize], spacing: &[f64]) -> Result<Self> {
        if n.is_empty() || n.len() > 2 || n.len() != spacing.len() {
            return Err(Error::Validation(format!(
                "grid needs 1 or 2 axes with matching spacings, got n={n:?} spacing={spacing:?}"
            )));
        }
        for (axis, (&ni, &si)) in n.iter().zip(spacing).enumerate() {
            if ni < 2 || ni % 2 != 0 {
                return Err(Error::Validation(format!(
                    "axis {axis}: sample count must be even and >= 2, got {ni}"
                )));
            }
            if si.is_nan() || si <= 0.0 || !si.is_finite() {
                return Err(Error::Validation(format!(
                    "axis {axis}: spacing must be positive and finite, got {si}"
                )));
            }
        }
        Ok(Grid {
            n: n.to_vec(),
            spacing: spacing.to_vec(),
        })
    }

    pub fn new_1d(n: usize, spacing: f64) -> Result<Self> {
        Grid::new(&[n], &[spacing])
    }

    /// Square 2-D grid with equal spacing on both axes.
    pub fn new_square(n: usize, spacing: f64) -> Result<Self> {
        Grid::new(&[n, n], &[spacing, spacing])
    }

    pub fn ndim(&self) -> usize {
        self.n.len()
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacing
    }

    /// Sample position `(j - n/2) * spacing` on one axis.
    pub fn position(&self, axis: usize, index: usize) -> f64 {
        (index as f64 - (self.n[axis] / 2) as f64) * self.spacing[axis]
    }

    /// Position vector of a flat row-major sample index.
    pub fn position_of(&self, flat: usize) -> Vec<f64> {
        match self.n.len() {
            1 => vec![self.position(0, flat)],
            _ => {
                let n1 = self.n[1];
                vec![self.position(0, flat / n1), self.position(1, flat % n1)]
            }
        }
    }

    /// Squared distance of a flat sample index from the grid center.
    pub fn radius_sq_of(&self, flat: usize) -> f64 {
        match self.n.len() {
            1 => {
                let x = self.position(0, flat);
                x * x
            }
            _ => {
                let n1 = self.n[1];
                let x0 = self.position(0, flat / n1);
                let x1 = self.position(1, flat % n1);
                x0 * x0 + x1 * x1
            }
        }
    }

    /// Half extent `(n/2) * spacing` of one axis.
    pub fn half_extent(&self, axis: usize) -> f64 {
        (self.n[axis] / 2) as f64 * self.spacing[axis]
    }

    /// Product of the axis spacings, the measure of one grid cell.
    pub fn cell_measure(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Frequency-domain grid: same sample counts, spacing `2*pi/(n*spacing)`.
    pub fn dual(&self) -> Grid {
        let spacing = self
            .n
            .iter()
            .zip(&self.spacing)
            .map(|(&ni, &si)| TAU / (ni as f64 * si))
            .collect();
        Grid {
            n: self.n.clone(),
            spacing,
        }
    }

    /// Same shape with spacings equal within `tol` relative.
    pub fn approx_eq(&self, other: &Grid, tol: f64) -> bool {
        self.n == other.n
            && self
                .spacing
                .iter()
                .zip(&other.spacing)
                .all(|(&a, &b)| (a - b).abs() <= tol * a.abs().max(b.abs()))
    }

    /// Grid scaled by a constant factor on every axis spacing.
    pub fn scaled(&self, factor: f64) -> Grid {
        Grid {
            n: self.n.clone(),
            spacing: self.spacing.iter().map(|s| s * factor).collect(),
        }
    }
}
