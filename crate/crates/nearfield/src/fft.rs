//! Centered, continuum-normalized discrete Fourier transform.
//!
//! Convention: `F(f)(xi) = (2*pi)^(-m/2) * integral f(x) exp(-i xi.x) dx`,
//! discretized as `dx^m * (2*pi)^(-m/2) * sum_j f_j exp(-i xi_l . x_j)` on
//! centered grids. With both grids centered, the sum reduces per axis to a
//! plain FFT framed by `(-1)^j` / `(-1)^l` sign ramps and a constant
//! `(-1)^(n/2)`, so the transform is exact to rounding. The output lives on
//! the dual grid and the map is unitary with respect to the grid measures:
//! `sum |F(f)|^2 dxi^m = sum |f|^2 dx^m`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

const SQRT_TAU: f64 = 2.5066282746310002;

/// One centered pass along contiguous lanes of length `n`.
///
/// `scale` carries the axis measure `spacing / sqrt(2*pi)`; the `(-1)^(n/2)`
/// constant folds into it.
fn centered_pass(data: &mut [Complex64], n: usize, inverse: bool, scale: f64) {
    let fft = plan(n, inverse);
    let parity = if (n / 2) % 2 == 1 { -1.0 } else { 1.0 };
    for lane in data.chunks_exact_mut(n) {
        for (j, v) in lane.iter_mut().enumerate() {
            if j % 2 == 1 {
                *v = -*v;
            }
        }
        fft.process(lane);
        for (l, v) in lane.iter_mut().enumerate() {
            let s = if l % 2 == 1 { -scale } else { scale };
            *v *= parity * s;
        }
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

fn centered_transform(f: &ComplexField, inverse: bool) -> ComplexField {
    let grid = &f.grid;
    let mut data = f.values.clone();
    match grid.ndim() {
        1 => {
            let n = grid.n(0);
            centered_pass(&mut data, n, inverse, grid.spacing(0) / SQRT_TAU);
        }
        _ => {
            let (n0, n1) = (grid.n(0), grid.n(1));
            centered_pass(&mut data, n1, inverse, grid.spacing(1) / SQRT_TAU);
            let mut t = transpose(&data, n0, n1);
            centered_pass(&mut t, n0, inverse, grid.spacing(0) / SQRT_TAU);
            data = transpose(&t, n1, n0);
        }
    }
    ComplexField {
        grid: grid.dual(),
        values: data,
    }
}

/// Unitary forward transform; output lives on the dual grid.
pub fn fourier_transform(f: &ComplexField) -> ComplexField {
    centered_transform(f, false)
}

/// Exact grid inverse of [`fourier_transform`].
pub fn inverse_fourier_transform(g: &ComplexField) -> ComplexField {
    centered_transform(g, true)
}

/// Centered embedding into a grid enlarged by an integer factor per axis,
/// with new samples set to `fill`.
pub fn pad_field(f: &ComplexField, factor: usize, fill: Complex64) -> Result<ComplexField> {
    if factor < 1 {
        return Err(Error::Validation("pad factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(f.clone());
    }
    let grid = &f.grid;
    let big_n: Vec<usize> = grid.shape().iter().map(|&n| n * factor).collect();
    let big = Grid::new(&big_n, grid.spacings())?;
    let mut values = vec![fill; big.len()];
    match grid.ndim() {
        1 => {
            let off = (big_n[0] - grid.n(0)) / 2;
            values[off..off + grid.n(0)].copy_from_slice(&f.values);
        }
        _ => {
            let (n0, n1) = (grid.n(0), grid.n(1));
            let (off0, off1) = ((big_n[0] - n0) / 2, (big_n[1] - n1) / 2);
            for r in 0..n0 {
                let src = &f.values[r * n1..(r + 1) * n1];
                let dst = (r + off0) * big_n[1] + off1;
                values[dst..dst + n1].copy_from_slice(src);
            }
        }
    }
    Ok(ComplexField { grid: big, values })
}

/// Centered crop onto a smaller grid with the same spacing; exact inverse of
/// [`pad_field`] on the embedded window.
pub fn crop_field(f: &ComplexField, target: &Grid) -> Result<ComplexField> {
    let grid = &f.grid;
    if target.ndim() != grid.ndim() {
        return Err(Error::GridMismatch("crop changes dimensionality".into()));
    }
    for axis in 0..grid.ndim() {
        if target.n(axis) > grid.n(axis) {
            return Err(Error::GridMismatch(format!(
                "crop target axis {axis} larger than source"
            )));
        }
        let (a, b) = (target.spacing(axis), grid.spacing(axis));
        if (a - b).abs() > 1e-12 * b {
            return Err(Error::GridMismatch(format!(
                "crop target spacing {a} differs from source {b} on axis {axis}"
            )));
        }
    }
    let mut values = Vec::with_capacity(target.len());
    match grid.ndim() {
        1 => {
            let off = (grid.n(0) - target.n(0)) / 2;
            values.extend_from_slice(&f.values[off..off + target.n(0)]);
        }
        _ => {
            let (off0, off1) = (
                (grid.n(0) - target.n(0)) / 2,
                (grid.n(1) - target.n(1)) / 2,
            );
            for r in 0..target.n(0) {
                let src = (r + off0) * grid.n(1) + off1;
                values.extend_from_slice(&f.values[src..src + target.n(1)]);
            }
        }
    }
    Ok(ComplexField {
        grid: target.clone(),
        values,
    })
}
