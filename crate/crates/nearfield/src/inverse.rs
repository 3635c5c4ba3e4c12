//! Reconstruction: Tikhonov-regularized conjugate gradients for the
//! linearized measurement, Gauss-Newton for the nonlinear one, object
//! recovery, and the tomographic pipeline.
//!
//! The data map is only real-linear in the perturbation, never
//! complex-linear, so solvers treat `h` as the pair `(Re h, Im h)` through
//! real inner products (grid measures included). The linear part of the
//! measurement and its adjoint are
//!
//! ```text
//! T(h)   = 2 Re(conj(R) F(w.h))
//! T*(r)  = 2 conj(w) Finv(R.r)    restricted to the support box,
//! ```
//!
//! and the Gauss-Newton model replaces `R` by `R + F(w.h)` at the current
//! iterate. Regularization inside Gauss-Newton follows a halving
//! continuation schedule with floor 1e-14.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fourier_transform, inverse_fourier_transform};
use crate::field::{ComplexField, RealImage};
use crate::forward::{Perturbation, SupportBox, TransmissionFunction};
use crate::grid::Grid;
use crate::optics::{probe_object_field, reference_term, ImagingGeometry, ProbeSpec, WeightSpec};
use crate::tomo::{fbp_reconstruct, log_transmission, FbpFilter, Sinogram, Volume};

/// Solver hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Tikhonov weight on `|h|^2`.
    pub reg_alpha: f64,
    pub cg_max_iter: usize,
    /// Relative residual target for conjugate gradients.
    pub cg_tol: f64,
    pub gn_max_iter: usize,
    /// Stop when the Gauss-Newton step falls below this fraction of `|h|`.
    pub gn_step_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            reg_alpha: 1e-10,
            cg_max_iter: 500,
            cg_tol: 1e-10,
            gn_max_iter: 20,
            gn_step_tol: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reg_alpha.is_nan() || self.reg_alpha < 0.0 {
            return Err(Error::Validation(format!(
                "reg_alpha must be >= 0, got {}",
                self.reg_alpha
            )));
        }
        for (name, v) in [("cg_tol", self.cg_tol), ("gn_step_tol", self.gn_step_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Validation(format!("{name} must be in (0, 1), got {v}")));
            }
        }
        if self.cg_max_iter == 0 || self.gn_max_iter == 0 {
            return Err(Error::Validation("iteration counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// What a solver did: iteration count, relative residual history, and the
/// regularization it ended on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// Least-squares objective per iteration (monotone for CG).
    pub objective_history: Vec<f64>,
    pub final_residual: f64,
    pub final_reg_alpha: f64,
    pub converged: bool,
}

/// Cached pieces of the linearized measurement at a fixed probe / weight /
/// grid / support configuration.
struct Model {
    grid: Grid,
    dual: Grid,
    support: SupportBox,
    weight: ComplexField,
    reference: ComplexField,
    mask: Option<Vec<bool>>,
}

impl Model {
    fn new(
        probe: &ProbeSpec,
        weight: &WeightSpec,
        grid: &Grid,
        support: &SupportBox,
        mask: Option<&[bool]>,
    ) -> Result<Model> {
        if support.is_empty() {
            return Err(Error::Validation("empty support box".into()));
        }
        let weight = weight.evaluate(grid)?;
        let dual = grid.dual();
        let reference = reference_term(probe, &dual)?;
        if let Some(m) = mask {
            if m.len() != dual.len() {
                return Err(Error::Validation("mask length mismatch".into()));
            }
            if m.iter().all(|&b| !b) {
                return Err(Error::Validation("mask selects no data samples".into()));
            }
        }
        Ok(Model {
            grid: grid.clone(),
            dual,
            support: support.clone(),
            weight,
            reference,
            mask: mask.map(|m| m.to_vec()),
        })
    }

    fn apply_mask(&self, r: &mut [f64]) {
        if let Some(mask) = &self.mask {
            for (v, &keep) in r.iter_mut().zip(mask) {
                if !keep {
                    *v = 0.0;
                }
            }
        }
    }

    /// `F(w.h)` on the dual grid.
    fn spectrum(&self, h: &[Complex64]) -> Vec<Complex64> {
        let wh = ComplexField {
            grid: self.grid.clone(),
            values: h
                .iter()
                .zip(&self.weight.values)
                .map(|(&hv, &wv)| wv * hv)
                .collect(),
        };
        fourier_transform(&wh).values
    }

    /// Masked linear forward `M T(h) = M 2 Re(conj(R_eff) F(w.h))`.
    fn forward_linear(&self, h: &[Complex64], r_eff: &[Complex64]) -> Vec<f64> {
        let spectrum = self.spectrum(h);
        let mut out: Vec<f64> = spectrum
            .iter()
            .zip(r_eff)
            .map(|(&g, &r)| 2.0 * (r.conj() * g).re)
            .collect();
        self.apply_mask(&mut out);
        out
    }

    /// Adjoint `T*(M r) = 2 conj(w) Finv(R_eff . r)` zeroed outside the box.
    fn adjoint(&self, r: &[f64], r_eff: &[Complex64]) -> Vec<Complex64> {
        let mut masked = r.to_vec();
        self.apply_mask(&mut masked);
        let rr = ComplexField {
            grid: self.dual.clone(),
            values: masked
                .iter()
                .zip(r_eff)
                .map(|(&rv, &re)| re * rv)
                .collect(),
        };
        let back = inverse_fourier_transform(&rr);
        let mut out: Vec<Complex64> = back
            .values
            .iter()
            .zip(&self.weight.values)
            .map(|(&b, &w)| 2.0 * w.conj() * b)
            .collect();
        for (flat, v) in out.iter_mut().enumerate() {
            if !self.support.contains_flat(&self.grid, flat) {
                *v = Complex64::ZERO;
            }
        }
        out
    }
}

fn re_inner(a: &[Complex64], b: &[Complex64], measure: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x.conj() * y).re)
        .sum::<f64>()
        * measure
}

/// Conjugate gradients on a self-adjoint positive system over complex
/// vectors with the real inner product. Errors when the residual grows for
/// ten consecutive iterations.
fn conjugate_gradient(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    measure: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(Vec<Complex64>, ConvergenceReport)> {
    let n = b.len();
    let mut x = vec![Complex64::ZERO; n];
    let mut r = b.to_vec();
    let rs0 = re_inner(&r, &r, measure);
    let mut report = ConvergenceReport {
        iterations: 0,
        residual_history: Vec::new(),
        objective_history: Vec::new(),
        final_residual: 0.0,
        final_reg_alpha: 0.0,
        converged: true,
    };
    if rs0 == 0.0 {
        return Ok((x, report));
    }
    let mut p = r.clone();
    let mut rs = rs0;
    let mut grew = 0usize;
    for iter in 0..max_iter {
        let ap = apply(&p);
        let pap = re_inner(&p, &ap, measure);
        if pap.is_nan() || pap <= 0.0 {
            // numerically indefinite direction: the Krylov space is exhausted
            break;
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = re_inner(&r, &r, measure);
        report.iterations = iter + 1;
        report.residual_history.push((rs_new / rs0).sqrt());
        // quadratic objective via Ax = b - r; monotone for exact CG
        let mut b_plus_r = b.to_vec();
        for i in 0..n {
            b_plus_r[i] += r[i];
        }
        report.objective_history.push(-0.5 * re_inner(&x, &b_plus_r, measure));
        if rs_new > rs {
            grew += 1;
            if grew >= 10 {
                return Err(Error::Solver(format!(
                    "conjugate gradients diverged: residual grew for {grew} consecutive iterations"
                )));
            }
        } else {
            grew = 0;
        }
        if (rs_new / rs0).sqrt() <= tol {
            rs = rs_new;
            break;
        }
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    report.final_residual = (rs / rs0).sqrt();
    report.converged = report.final_residual <= tol;
    Ok((x, report))
}

/// Linear part of the measurement, `T(dh) = 2 Re(conj(R) F(w.dh))`.
pub fn jacobian_apply(
    dh: &Perturbation,
    probe: &ProbeSpec,
    weight: &WeightSpec,
) -> Result<RealImage> {
    let model = Model::new(probe, weight, &dh.field.grid, &dh.support, None)?;
    let values = model.forward_linear(&dh.field.values, &model.reference.values);
    RealImage::new(model.dual, values)
}

/// Derivative of the nonlinear intensity map at `h`:
/// `dF[h](dh) = 2 Re(conj(R + F(w.h)) F(w.dh))`.
pub fn nonlinear_jacobian_apply(
    h: &Perturbation,
    dh: &Perturbation,
    probe: &ProbeSpec,
    weight: &WeightSpec,
) -> Result<RealImage> {
    let model = Model::new(probe, weight, &h.field.grid, &h.support, None)?;
    let g = model.spectrum(&h.field.values);
    let r_eff: Vec<Complex64> = model
        .reference
        .values
        .iter()
        .zip(&g)
        .map(|(&r, &gv)| r + gv)
        .collect();
    let values = model.forward_linear(&dh.field.values, &r_eff);
    RealImage::new(model.dual, values)
}

/// Adjoint of [`jacobian_apply`] with respect to the real measured inner
/// products; data outside the image mask is ignored.
pub fn jacobian_adjoint(
    r: &RealImage,
    probe: &ProbeSpec,
    weight: &WeightSpec,
    grid: &Grid,
    support: &SupportBox,
) -> Result<Perturbation> {
    let model = Model::new(probe, weight, grid, support, r.mask.as_deref())?;
    if !r.grid.approx_eq(&model.dual, 1e-9) {
        return Err(Error::GridMismatch(
            "residual image must live on the dual of the object grid".into(),
        ));
    }
    let values = model.adjoint(&r.values, &model.reference.values);
    Perturbation::new(
        ComplexField {
            grid: grid.clone(),
            values,
        },
        support.clone(),
    )
}

/// Tikhonov-regularized least squares for the linearized measurement:
/// minimizes `|M(T(h) - (data - |R|^2))|^2 + reg_alpha |h|^2` by conjugate
/// gradients on the normal equations.
pub fn reconstruct_linear(
    data: &RealImage,
    probe: &ProbeSpec,
    weight: &WeightSpec,
    grid: &Grid,
    support: &SupportBox,
    cfg: &SolverConfig,
) -> Result<(Perturbation, ConvergenceReport)> {
    cfg.validate()?;
    let model = Model::new(probe, weight, grid, support, data.mask.as_deref())?;
    if !data.grid.approx_eq(&model.dual, 1e-9) {
        return Err(Error::GridMismatch(
            "data grid must be the dual of the object grid".into(),
        ));
    }
    let mut y: Vec<f64> = data
        .values
        .iter()
        .zip(&model.reference.values)
        .map(|(&d, &r)| d - r.norm_sqr())
        .collect();
    model.apply_mask(&mut y);

    let b = model.adjoint(&y, &model.reference.values);
    let measure = grid.cell_measure();
    let alpha = cfg.reg_alpha;
    let apply = |h: &[Complex64]| -> Vec<Complex64> {
        let th = model.forward_linear(h, &model.reference.values);
        let mut out = model.adjoint(&th, &model.reference.values);
        for (o, &hv) in out.iter_mut().zip(h) {
            *o += alpha * hv;
        }
        out
    };
    let (h, mut report) = conjugate_gradient(apply, &b, measure, cfg.cg_max_iter, cfg.cg_tol)?;
    report.final_reg_alpha = alpha;
    let h = Perturbation::new(
        ComplexField {
            grid: grid.clone(),
            values: h,
        },
        support.clone(),
    )?;
    Ok((h, report))
}

/// Gauss-Newton for the nonlinear measurement with a halving regularization
/// continuation (floor 1e-14). Stops when the step norm falls below
/// `gn_step_tol * |h|` or errors after three stagnant outer iterations.
pub fn reconstruct_nonlinear(
    data: &RealImage,
    probe: &ProbeSpec,
    weight: &WeightSpec,
    grid: &Grid,
    support: &SupportBox,
    init: &Perturbation,
    cfg: &SolverConfig,
) -> Result<(Perturbation, ConvergenceReport)> {
    cfg.validate()?;
    let model = Model::new(probe, weight, grid, support, data.mask.as_deref())?;
    if !data.grid.approx_eq(&model.dual, 1e-9) {
        return Err(Error::GridMismatch(
            "data grid must be the dual of the object grid".into(),
        ));
    }
    if !init.field.grid.approx_eq(grid, 1e-9) {
        return Err(Error::GridMismatch("init must live on the object grid".into()));
    }
    let measure = grid.cell_measure();
    let mut y = data.values.clone();
    model.apply_mask(&mut y);

    let mut h = init.field.values.clone();
    for (flat, v) in h.iter_mut().enumerate() {
        if !support.contains_flat(grid, flat) {
            *v = Complex64::ZERO;
        }
    }
    let mut alpha = cfg.reg_alpha.max(1e-14);
    let mut report = ConvergenceReport {
        iterations: 0,
        residual_history: Vec::new(),
        objective_history: Vec::new(),
        final_residual: f64::NAN,
        final_reg_alpha: alpha,
        converged: false,
    };
    let y_norm = (y.iter().map(|v| v * v).sum::<f64>() * model.dual.cell_measure()).sqrt();

    let misfit_of = |h: &[Complex64]| -> f64 {
        let g = model.spectrum(h);
        let mut residual: Vec<f64> = model
            .reference
            .values
            .iter()
            .zip(&g)
            .zip(&y)
            .map(|((&r, &gv), &yv)| yv - (r + gv).norm_sqr())
            .collect();
        model.apply_mask(&mut residual);
        (residual.iter().map(|v| v * v).sum::<f64>() * model.dual.cell_measure()).sqrt()
    };

    let mut misfit = misfit_of(&h);
    let initial_misfit = misfit;
    'outer: for outer in 1..=cfg.gn_max_iter {
        report.iterations = outer;
        report.residual_history
            .push(if y_norm > 0.0 { misfit / y_norm } else { misfit });
        report.final_residual = *report.residual_history.last().unwrap();
        report.final_reg_alpha = alpha;
        if misfit == 0.0 {
            report.converged = true;
            break;
        }

        let g = model.spectrum(&h);
        let r_eff: Vec<Complex64> = model
            .reference
            .values
            .iter()
            .zip(&g)
            .map(|(&r, &gv)| r + gv)
            .collect();
        let mut residual: Vec<f64> = r_eff
            .iter()
            .zip(&y)
            .map(|(&re, &yv)| yv - re.norm_sqr())
            .collect();
        model.apply_mask(&mut residual);
        let b = model.adjoint(&residual, &r_eff);

        // solve for the step, backing the regularization off on overshoot.
        // Far from the solution the ladder finds a damping that descends; at
        // the attainable misfit floor it never does, which ends the
        // iteration (an error if no progress was ever made).
        let (step, trial, trial_misfit) = 'ladder: {
            for _ in 0..30 {
                let a = alpha;
                let apply = |s: &[Complex64]| -> Vec<Complex64> {
                    let js = model.forward_linear(s, &r_eff);
                    let mut out = model.adjoint(&js, &r_eff);
                    for (o, &sv) in out.iter_mut().zip(s) {
                        *o += a * sv;
                    }
                    out
                };
                let (step, _) =
                    conjugate_gradient(apply, &b, measure, cfg.cg_max_iter, cfg.cg_tol)?;
                let trial: Vec<Complex64> =
                    h.iter().zip(&step).map(|(&hv, &sv)| hv + sv).collect();
                let trial_misfit = misfit_of(&trial);
                if trial_misfit <= misfit {
                    break 'ladder (step, trial, trial_misfit);
                }
                alpha *= 8.0;
            }
            if misfit <= initial_misfit * (1.0 - 1e-9) || misfit <= 1e-12 * y_norm {
                report.converged = true;
                break 'outer;
            }
            return Err(Error::Solver(format!(
                "Gauss-Newton stagnated at data misfit {misfit:.3e} without progress"
            )));
        };

        let step_norm = (re_inner(&step, &step, measure)).sqrt();
        h = trial;
        misfit = trial_misfit;
        let h_norm = (re_inner(&h, &h, measure)).sqrt();
        if step_norm == 0.0 || step_norm <= cfg.gn_step_tol * h_norm {
            report.converged = true;
            report.final_residual = if y_norm > 0.0 { misfit / y_norm } else { misfit };
            break;
        }
        alpha = (alpha / 2.0).max(1e-14);
    }
    let h = Perturbation::new(
        ComplexField {
            grid: grid.clone(),
            values: h,
        },
        support.clone(),
    )?;
    Ok((h, report))
}

/// Object transmission from a recovered perturbation, `o = 1 + h / p`.
pub fn recover_object(h: &Perturbation, probe: &ProbeSpec) -> Result<TransmissionFunction> {
    let p = probe_object_field(probe, &h.field.grid)?;
    let max = p.max_abs();
    let min = p.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if min.is_nan() || min < 1e-14 * max {
        return Err(Error::Probe(format!(
            "probe vanishes on the object grid (min |p| = {min:.3e})"
        )));
    }
    let values = h
        .field
        .values
        .iter()
        .zip(&p.values)
        .map(|(&hv, &pv)| Complex64::ONE + hv / pv)
        .collect();
    TransmissionFunction::new(
        ComplexField {
            grid: h.field.grid.clone(),
            values,
        },
        h.support.clone(),
    )
}

/// Full tomographic reconstruction: per-angle retrieval (linearized by
/// default, Gauss-Newton when `nonlinear`), object recovery, branch-safe
/// logarithm, and filtered backprojection of both line-integral sinograms.
/// One detector distance per angle; no second distance anywhere.
#[allow(clippy::too_many_arguments)]
pub fn tomo_reconstruct(
    images: &[RealImage],
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
    angles: &[f64],
    support_radius: f64,
    cfg: &SolverConfig,
    nonlinear: bool,
) -> Result<(Volume, Vec<ConvergenceReport>)> {
    tomo_reconstruct_impl(images, probe, geom, angles, support_radius, cfg, nonlinear, false)
}

/// [`tomo_reconstruct`] with the wrap-boundary error downgraded to a pass,
/// for experiments on objects near the phase-wrap limit.
#[allow(clippy::too_many_arguments)]
pub fn tomo_reconstruct_allow_wrap(
    images: &[RealImage],
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
    angles: &[f64],
    support_radius: f64,
    cfg: &SolverConfig,
    nonlinear: bool,
) -> Result<(Volume, Vec<ConvergenceReport>)> {
    tomo_reconstruct_impl(images, probe, geom, angles, support_radius, cfg, nonlinear, true)
}

#[allow(clippy::too_many_arguments)]
fn tomo_reconstruct_impl(
    images: &[RealImage],
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
    angles: &[f64],
    support_radius: f64,
    cfg: &SolverConfig,
    nonlinear: bool,
    allow_wrap: bool,
) -> Result<(Volume, Vec<ConvergenceReport>)> {
    geom.validate()?;
    if geom.m != 1 {
        return Err(Error::Validation("tomographic retrieval needs m = 1".into()));
    }
    if images.len() != angles.len() {
        return Err(Error::Validation(format!(
            "{} images for {} angles",
            images.len(),
            angles.len()
        )));
    }
    if angles.len() < 2 {
        return Err(Error::Validation("tomographic reconstruction needs >= 2 angles".into()));
    }
    let n = images[0].grid.n(0);
    let detector = Grid::new_1d(n, geom.pixel)?;
    for img in images {
        if img.grid.ndim() != 1 || img.grid.n(0) != n {
            return Err(Error::GridMismatch("inconsistent per-angle image grids".into()));
        }
    }
    // the dimensionless detector must be self-dual so measured samples feed
    // the operator algebra directly
    let dxi = geom.dimensionless_spacing();
    let critical = (crate::grid::TAU / n as f64).sqrt();
    if (dxi - critical).abs() > 1e-6 * critical {
        return Err(Error::Validation(format!(
            "retrieval needs critical sampling: dimensionless spacing {dxi:.6e} \
             vs (2 pi / n)^(1/2) = {critical:.6e}; adjust d, k, or pixel"
        )));
    }
    let xi_grid = detector.scaled(geom.xi_scale());
    let support = SupportBox::from_radius(&xi_grid, geom.xi_scale() * support_radius);
    if 2 * support.len() > n {
        return Err(Error::Validation(format!(
            "support radius {support_radius} gives {} real unknowns for {n} detector samples; \
             single-distance retrieval needs the support to cover at most half the window",
            2 * support.len()
        )));
    }

    let mut r_delta_rows = Vec::with_capacity(angles.len());
    let mut r_beta_rows = Vec::with_capacity(angles.len());
    let mut reports = Vec::with_capacity(angles.len());
    for (img, &theta) in images.iter().zip(angles) {
        let data = RealImage {
            grid: xi_grid.dual(),
            values: img.values.clone(),
            mask: img.mask.clone(),
        };
        let (h, report) = if nonlinear {
            let init = Perturbation::zeros(xi_grid.clone(), support.clone())?;
            reconstruct_nonlinear(&data, probe, &WeightSpec::FresnelChirp, &xi_grid, &support, &init, cfg)?
        } else {
            reconstruct_linear(&data, probe, &WeightSpec::FresnelChirp, &xi_grid, &support, cfg)?
        };
        reports.push(report);
        let o = recover_object(&h, probe)?;
        let (r_delta, r_beta) = log_transmission(&o, geom.k)?;
        if !allow_wrap {
            for (j, &rd) in r_delta.iter().enumerate() {
                if geom.k * rd >= crate::grid::TAU - 1e-6 {
                    return Err(Error::PhaseWrap {
                        theta,
                        x: detector.position(0, j),
                        value: geom.k * rd,
                    });
                }
            }
        }
        r_delta_rows.push(r_delta);
        r_beta_rows.push(r_beta);
    }

    let delta_sino = Sinogram::new(
        angles.to_vec(),
        detector.clone(),
        r_delta_rows.concat(),
    )?;
    let beta_sino = Sinogram::new(angles.to_vec(), detector, r_beta_rows.concat())?;
    let delta = fbp_reconstruct(&delta_sino, FbpFilter::RamLak)?;
    let beta = fbp_reconstruct(&beta_sino, FbpFilter::RamLak)?;
    let volume = Volume {
        delta: delta.values,
        beta: beta.values,
        grid: delta.grid,
        support_radius,
    };
    Ok((volume, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{intensity_operator, linearized_intensity_operator};
    use crate::grid::TAU;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plane(p0: f64) -> ProbeSpec {
        ProbeSpec::plane_wave(Complex64::new(p0, 0.0)).unwrap()
    }

    fn critical_grid(n: usize) -> Grid {
        Grid::new_1d(n, (TAU / n as f64).sqrt()).unwrap()
    }

    fn random_perturbation(grid: &Grid, box_len: usize, seed: u64) -> Perturbation {
        let support = SupportBox::centered(grid, box_len).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = ComplexField {
            grid: grid.clone(),
            values: (0..grid.len())
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        };
        Perturbation::new(field, support).unwrap()
    }

    fn random_image(grid: &Grid, seed: u64) -> RealImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RealImage::new(
            grid.clone(),
            (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect(),
        )
        .unwrap()
    }

    fn rel_error(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|v| v.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn jacobian_vanishes_at_zero_and_matches_linearized_operator() {
        let g = critical_grid(64);
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let zero = Perturbation::zeros(g.clone(), SupportBox::centered(&g, 16).unwrap()).unwrap();
        let t0 = jacobian_apply(&zero, &probe, &w).unwrap();
        assert!(t0.values.iter().all(|&v| v == 0.0));

        let h = random_perturbation(&g, 16, 8);
        let t = jacobian_apply(&h, &probe, &w).unwrap();
        let flin = linearized_intensity_operator(&h, &probe, &w).unwrap();
        let flin0 = linearized_intensity_operator(&zero, &probe, &w).unwrap();
        let peak = flin.max();
        for i in 0..t.values.len() {
            assert!((t.values[i] - (flin.values[i] - flin0.values[i])).abs() <= 1e-12 * peak);
        }

        // real homogeneity
        let h2 = Perturbation::new(h.field.scaled(Complex64::new(2.0, 0.0)), h.support.clone())
            .unwrap();
        let t2 = jacobian_apply(&h2, &probe, &w).unwrap();
        for i in 0..t.values.len() {
            assert!((t2.values[i] - 2.0 * t.values[i]).abs() <= 1e-13 * peak.max(1.0));
        }
    }

    #[test]
    fn adjoint_identity_on_random_pairs_and_grids() {
        // <T h, r>_data = <h, T* r>_object over 50 pairs and 5 grid sizes
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let mut worst = 0.0f64;
        for (gi, n) in [16usize, 32, 64, 128, 256].iter().enumerate() {
            let g = critical_grid(*n);
            let support = SupportBox::centered(&g, n / 4).unwrap();
            for pair in 0..10u64 {
                let seed = (gi as u64) * 100 + pair;
                let h = random_perturbation(&g, n / 4, seed);
                let r = random_image(&g.dual(), seed + 5000);
                let th = jacobian_apply(&h, &probe, &w).unwrap();
                let ttr = jacobian_adjoint(&r, &probe, &w, &g, &support).unwrap();
                let lhs: f64 = th
                    .values
                    .iter()
                    .zip(&r.values)
                    .map(|(&a, &b)| a * b)
                    .sum::<f64>()
                    * g.dual().cell_measure();
                let rhs: f64 = h
                    .field
                    .values
                    .iter()
                    .zip(&ttr.field.values)
                    .map(|(&a, &b)| (a.conj() * b).re)
                    .sum::<f64>()
                    * g.cell_measure();
                let scale = lhs.abs().max(rhs.abs()).max(1e-300);
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
        assert!(worst <= 1e-10, "adjoint defect {worst:.3e}");
    }

    #[test]
    fn adjoint_of_zero_is_zero_and_masked_adjoint_ignores_hidden_samples() {
        let g = critical_grid(64);
        let support = SupportBox::centered(&g, 16).unwrap();
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;

        let zero = RealImage::zeros(g.dual());
        let out = jacobian_adjoint(&zero, &probe, &w, &g, &support).unwrap();
        assert!(out.field.values.iter().all(|&v| v == Complex64::ZERO));

        let mask: Vec<bool> = (0..64).map(|i| (16..48).contains(&i)).collect();
        let r1 = random_image(&g.dual(), 1).with_mask(mask.clone()).unwrap();
        let mut r2 = r1.clone();
        for (i, keep) in mask.iter().enumerate() {
            if !keep {
                r2.values[i] += 17.0; // perturb only hidden samples
            }
        }
        let a1 = jacobian_adjoint(&r1, &probe, &w, &g, &support).unwrap();
        let a2 = jacobian_adjoint(&r2, &probe, &w, &g, &support).unwrap();
        assert_eq!(a1.field.values, a2.field.values);
    }

    #[test]
    fn zero_data_reconstructs_to_zero() {
        let g = critical_grid(128);
        let support = SupportBox::centered(&g, 32).unwrap();
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let zero = Perturbation::zeros(g.clone(), support.clone()).unwrap();
        let data = linearized_intensity_operator(&zero, &probe, &w).unwrap();
        let cfg = SolverConfig::default();
        let (h, report) = reconstruct_linear(&data, &probe, &w, &g, &support, &cfg).unwrap();
        assert!(report.converged);
        let norm: f64 = h.field.values.iter().map(|v| v.norm_sqr()).sum();
        assert!(norm.sqrt() <= cfg.cg_tol);
    }

    #[test]
    fn full_data_linear_reconstruction_is_exact() {
        // 32 complex unknowns, 128 data samples (2x real oversampling)
        let g = critical_grid(128);
        let support = SupportBox::centered(&g, 32).unwrap();
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let truth = random_perturbation(&g, 32, 77);
        let data = linearized_intensity_operator(&truth, &probe, &w).unwrap();
        let cfg = SolverConfig {
            reg_alpha: 1e-12,
            ..SolverConfig::default()
        };
        let (h, report) = reconstruct_linear(&data, &probe, &w, &g, &support, &cfg).unwrap();
        let err = rel_error(&h.field.values, &truth.field.values);
        assert!(err <= 1e-6, "relative error {err:.3e}");
        assert!(report.converged);
    }

    #[test]
    fn reconstruction_error_decreases_with_regularization() {
        let g = critical_grid(128);
        let support = SupportBox::centered(&g, 32).unwrap();
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let truth = random_perturbation(&g, 32, 13);
        let data = linearized_intensity_operator(&truth, &probe, &w).unwrap();
        let mut errors = Vec::new();
        for alpha in [1e-6, 1e-9, 1e-12] {
            let cfg = SolverConfig {
                reg_alpha: alpha,
                cg_tol: 1e-12,
                ..SolverConfig::default()
            };
            let (h, _) = reconstruct_linear(&data, &probe, &w, &g, &support, &cfg).unwrap();
            errors.push(rel_error(&h.field.values, &truth.field.values));
        }
        assert!(
            errors[0] > errors[1] && errors[1] > errors[2],
            "errors not strictly decreasing: {errors:?}"
        );
    }

    #[test]
    fn cg_objective_is_monotone() {
        let g = critical_grid(128);
        let support = SupportBox::centered(&g, 32).unwrap();
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let truth = random_perturbation(&g, 32, 3);
        let data = linearized_intensity_operator(&truth, &probe, &w).unwrap();
        let cfg = SolverConfig {
            reg_alpha: 1e-9,
            cg_tol: 1e-13,
            ..SolverConfig::default()
        };
        let (_, report) = reconstruct_linear(&data, &probe, &w, &g, &support, &cfg).unwrap();
        for pair in report.objective_history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12 * pair[0].abs().max(1e-300),
                "objective increased: {pair:?}"
            );
        }
    }

    #[test]
    fn quarter_window_reconstruction_of_the_calibration_object() {
        use crate::analysis::{calibration_perturbation, contiguous_mask, CALIBRATION_SEED};
        let g = critical_grid(128);
        let support = SupportBox::centered(&g, 4).unwrap();
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let truth = calibration_perturbation(&g, 4, CALIBRATION_SEED).unwrap();
        let data = linearized_intensity_operator(&truth, &probe, &w).unwrap();
        let data = data.with_mask(contiguous_mask(128, 0.25)).unwrap();
        let cfg = SolverConfig {
            reg_alpha: 1e-8,
            cg_tol: 1e-12,
            cg_max_iter: 2000,
            ..SolverConfig::default()
        };
        let (h, _) = reconstruct_linear(&data, &probe, &w, &g, &support, &cfg).unwrap();
        let err = rel_error(&h.field.values, &truth.field.values);
        assert!(err <= 0.05, "restricted-window error {err:.3e}");
    }

    #[test]
    fn nonlinear_jacobian_matches_central_differences() {
        let g = critical_grid(64);
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let h = random_perturbation(&g, 16, 21);
        let dh = random_perturbation(&g, 16, 22);
        let jac = nonlinear_jacobian_apply(&h, &dh, &probe, &w).unwrap();

        let step = 1e-5;
        let plus = Perturbation::new(
            h.field.add_scaled(&dh.field, Complex64::new(step, 0.0)),
            h.support.clone(),
        )
        .unwrap();
        let minus = Perturbation::new(
            h.field.add_scaled(&dh.field, Complex64::new(-step, 0.0)),
            h.support.clone(),
        )
        .unwrap();
        let fp = intensity_operator(&plus, &probe, &w).unwrap();
        let fm = intensity_operator(&minus, &probe, &w).unwrap();
        let scale = jac.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for i in 0..jac.values.len() {
            let fd = (fp.values[i] - fm.values[i]) / (2.0 * step);
            worst = worst.max((fd - jac.values[i]).abs());
        }
        assert!(worst <= 1e-6 * scale, "jacobian fd defect {worst:.3e}");
    }

    #[test]
    fn nonlinear_solver_returns_zero_in_one_iteration_for_zero_data() {
        let g = critical_grid(64);
        let support = SupportBox::centered(&g, 16).unwrap();
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let zero = Perturbation::zeros(g.clone(), support.clone()).unwrap();
        let data = intensity_operator(&zero, &probe, &w).unwrap();
        let cfg = SolverConfig::default();
        let (h, report) =
            reconstruct_nonlinear(&data, &probe, &w, &g, &support, &zero, &cfg).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        assert!(h.field.values.iter().all(|&v| v == Complex64::ZERO));
    }

    #[test]
    fn nonlinear_solver_recovers_a_moderate_object() {
        // 1-D version of a refracting, weakly absorbing disc: phi = 1,
        // mu = 0.1 on a centered interval, full data, init = 0
        let n = 64;
        let g = critical_grid(n);
        let mut phi = vec![0.0f64; n];
        let mut mu = vec![0.0f64; n];
        for j in 24..40 {
            phi[j] = 1.0;
            mu[j] = 0.1;
        }
        let o_values: Vec<Complex64> = phi
            .iter()
            .zip(&mu)
            .map(|(&p, &m)| Complex64::from_polar((-m).exp(), -p))
            .collect();
        let support = SupportBox::centered(&g, 16).unwrap();
        let truth = Perturbation::new(
            ComplexField {
                grid: g.clone(),
                values: o_values.iter().map(|&o| o - Complex64::ONE).collect(),
            },
            support.clone(),
        )
        .unwrap();
        let probe = plane(1.0);
        let w = WeightSpec::FresnelChirp;
        let data = intensity_operator(&truth, &probe, &w).unwrap();
        let cfg = SolverConfig {
            reg_alpha: 1e-6,
            cg_tol: 1e-12,
            gn_max_iter: 30,
            gn_step_tol: 1e-9,
            ..SolverConfig::default()
        };
        let init = Perturbation::zeros(g.clone(), support.clone()).unwrap();
        let (h, report) =
            reconstruct_nonlinear(&data, &probe, &w, &g, &support, &init, &cfg).unwrap();
        let err = rel_error(&h.field.values, &truth.field.values);
        assert!(err <= 1e-3, "nonlinear recovery error {err:.3e}");
        assert!(report.converged);
    }

    #[test]
    fn recover_object_round_trips() {
        let g = critical_grid(64);
        let support = SupportBox::centered(&g, 16).unwrap();
        let probe = plane(2.0);

        let zero = Perturbation::zeros(g.clone(), support.clone()).unwrap();
        let o = recover_object(&zero, &probe).unwrap();
        assert!(o.field.values.iter().all(|&v| v == Complex64::ONE));

        // o -> h = p (o - 1) -> recover
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut o_values = vec![Complex64::ONE; 64];
        for item in o_values.iter_mut().take(40).skip(24) {
            *item = Complex64::new(
                1.0 + 0.3 * (rng.random::<f64>() - 0.5),
                0.3 * (rng.random::<f64>() - 0.5),
            );
        }
        let h = Perturbation::new(
            ComplexField {
                grid: g.clone(),
                values: o_values
                    .iter()
                    .map(|&ov| Complex64::new(2.0, 0.0) * (ov - Complex64::ONE))
                    .collect(),
            },
            support.clone(),
        )
        .unwrap();
        let recovered = recover_object(&h, &probe).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in recovered.field.values.iter().zip(&o_values) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst <= 1e-13, "round trip defect {worst:.3e}");
        // plane wave p0 = 2: o = 1 + h/2 pointwise
        for (o_v, h_v) in recovered.field.values.iter().zip(&h.field.values) {
            assert!((o_v - (Complex64::ONE + h_v / 2.0)).norm() <= 1e-15);
        }
    }

    #[test]
    fn tomo_round_trip_zero_volume() {
        let n = 64;
        let pixel = 1.0;
        let k = 1.0;
        let d = ImagingGeometry::critical_distance(k, pixel, n);
        let geom = ImagingGeometry::new(k, d, pixel, 1).unwrap();
        let grid = Grid::new_square(n, pixel).unwrap();
        let v = Volume::new(grid, vec![0.0; n * n], vec![0.0; n * n], 12.0).unwrap();
        let probe = plane(1.0);
        let angles: Vec<f64> = (0..8).map(|i| i as f64 * std::f64::consts::PI / 8.0).collect();
        let images = crate::tomo::tomo_forward(&v, &probe, &geom, &angles, false).unwrap();
        let cfg = SolverConfig::default();
        let (volume, reports) =
            tomo_reconstruct(&images, &probe, &geom, &angles, 12.0, &cfg, false).unwrap();
        assert!(reports.iter().all(|r| r.converged));
        let peak = volume.delta.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(peak <= 1e-8, "zero-volume delta peak {peak:.3e}");
    }

    /// Shared setup of the single-distance tomography round trip: smooth
    /// weak phantom (peak k R(delta) = 0.5, k R(beta) = 0.05), 180 angles,
    /// n = 64, critically sampled geometry.
    pub(crate) fn tomo_round_trip_errors(nonlinear: bool) -> (f64, f64) {
        let n = 64;
        let pixel = 1.0;
        let k = 1.0;
        let d = ImagingGeometry::critical_distance(k, pixel, n);
        let geom = ImagingGeometry::new(k, d, pixel, 1).unwrap();
        let grid = Grid::new_square(n, pixel).unwrap();
        let v = crate::tomo::smooth_blob_volume(&grid, 0.25 * grid.half_extent(0), 0.5, 0.05, k)
            .unwrap();
        let probe = plane(1.0);
        let angles: Vec<f64> = (0..180)
            .map(|i| i as f64 * std::f64::consts::PI / 180.0)
            .collect();
        let images = crate::tomo::tomo_forward(&v, &probe, &geom, &angles, false).unwrap();
        let cfg = SolverConfig {
            reg_alpha: 1e-8,
            cg_tol: 1e-8,
            cg_max_iter: 200,
            gn_max_iter: 25,
            gn_step_tol: 1e-7,
        };
        let (rec, _) =
            tomo_reconstruct(&images, &probe, &geom, &angles, v.support_radius, &cfg, nonlinear)
                .unwrap();
        let rel = |a: &[f64], b: &[f64]| {
            let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            let den: f64 = b.iter().map(|y| y * y).sum();
            (num / den).sqrt()
        };
        (rel(&rec.delta, &v.delta), rel(&rec.beta, &v.beta))
    }

    #[test]
    fn tomo_round_trip_recovers_delta_and_beta_from_one_distance() {
        // joint delta and beta from a single distance per angle
        let (delta_err, beta_err) = tomo_round_trip_errors(true);
        assert!(delta_err <= 0.10, "delta error {delta_err:.4}");
        assert!(beta_err <= 0.15, "beta error {beta_err:.4}");
    }

    #[test]
    fn tomo_rejects_phase_wrapping_and_too_few_angles() {
        let n = 64;
        let pixel = 1.0;
        let k = 1.0;
        let d = ImagingGeometry::critical_distance(k, pixel, n);
        let geom = ImagingGeometry::new(k, d, pixel, 1).unwrap();
        let grid = Grid::new_square(n, pixel).unwrap();
        // peak k R(delta) = 6.4 > 2 pi
        let strong = crate::tomo::smooth_blob_volume(&grid, 12.0, 6.4, 0.0, k).unwrap();
        let probe = plane(1.0);
        let angles = [0.0, 1.0];
        match crate::tomo::tomo_forward(&strong, &probe, &geom, &angles, false) {
            Err(Error::PhaseWrap { .. }) => {}
            other => panic!("expected phase wrap, got {other:?}"),
        }

        let img = RealImage::new(Grid::new_1d(n, pixel).unwrap(), vec![1.0; n]).unwrap();
        let cfg = SolverConfig::default();
        assert!(matches!(
            tomo_reconstruct(&[img], &probe, &geom, &[0.0], 10.0, &cfg, false),
            Err(Error::Validation(_))
        ));
    }
}
