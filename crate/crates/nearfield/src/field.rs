//! Sampled complex wave fields and real detector images.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Complex double-precision samples on a centered grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "field has {} samples for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Validation("field contains NaN or Inf".into()));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![Complex64::ZERO; grid.len()];
        ComplexField { grid, values }
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        let values = vec![value; grid.len()];
        ComplexField { grid, values }
    }

    /// Build from a function of the sample position.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position_of(i))).collect();
        ComplexField { grid, values }
    }

    /// `sum |f|^2 * dx^m`, the discrete L2 energy.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_measure()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination with another field on the same grid shape.
    pub fn zip_map(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> ComplexField {
        assert_eq!(
            self.grid.shape(),
            other.grid.shape(),
            "zip_map on mismatched grids"
        );
        ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> ComplexField {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &ComplexField, c: Complex64) -> ComplexField {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn hadamard(&self, other: &ComplexField) -> ComplexField {
        self.zip_map(other, |a, b| a * b)
    }

    /// Intensity `|f|^2` as a real image on the same grid.
    pub fn intensity(&self) -> RealImage {
        RealImage {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
            mask: None,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Real detector data; `mask[i] = true` marks samples inside the data set U.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub mask: Option<Vec<bool>>,
}

impl RealImage {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "image has {} samples for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("image contains NaN or Inf".into()));
        }
        Ok(RealImage {
            grid,
            values,
            mask: None,
        })
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.values.len() {
            return Err(Error::Validation(format!(
                "mask has {} entries for {} samples",
                mask.len(),
                self.values.len()
            )));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        RealImage {
            grid,
            values,
            mask: None,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Number of samples inside the mask (all of them when no mask is set).
    pub fn unmasked_len(&self) -> usize {
        match &self.mask {
            Some(m) => m.iter().filter(|&&b| b).count(),
            None => self.values.len(),
        }
    }

    /// Copy with values outside the mask set to zero.
    pub fn masked_values(&self) -> Vec<f64> {
        match &self.mask {
            Some(m) => self
                .values
                .iter()
                .zip(m)
                .map(|(&v, &keep)| if keep { v } else { 0.0 })
                .collect(),
            None => self.values.clone(),
        }
    }
}
