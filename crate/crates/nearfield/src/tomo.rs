//! Parallel-beam tomography: Radon transform, per-angle transmission
//! functions, phase-wrap validation, filtered backprojection.
//!
//! Rotating a slice `delta - i beta` in the beam and projecting along the
//! axial direction turns the imaging model into line integrals: each angle
//! sees the 1-D transmission function
//! `O_theta = exp(-i k R_theta(delta - i beta))`. Recovering the line
//! integrals from `O_theta` inverts a pointwise exponential, which is only
//! unambiguous while `0 <= k R(delta) < 2 pi`; the branch convention
//! `Im(log o) in (-2 pi, 0]` is hard-coded and validated, never unwrapped
//! heuristically.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fourier_transform, inverse_fourier_transform};
use crate::field::{ComplexField, RealImage};
use crate::forward::{
    holographic_intensity, transmission_from_projection, PhaseAbsorptionProjection, SupportBox,
    TransmissionFunction,
};
use crate::grid::Grid;
use crate::optics::{ImagingGeometry, ProbeSpec};

/// Refractive decrement `delta` and absorption `beta` sampled over the
/// rotation plane, compactly supported inside a declared disc.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub delta: Vec<f64>,
    pub beta: Vec<f64>,
    pub grid: Grid,
    pub support_radius: f64,
}

impl Volume {
    pub fn new(grid: Grid, delta: Vec<f64>, beta: Vec<f64>, support_radius: f64) -> Result<Self> {
        if grid.ndim() != 2 || grid.n(0) != grid.n(1) || grid.spacing(0) != grid.spacing(1) {
            return Err(Error::Validation("volume grid must be square".into()));
        }
        if delta.len() != grid.len() || beta.len() != grid.len() {
            return Err(Error::Validation("volume sample count mismatch".into()));
        }
        if beta.iter().any(|&b| b.is_nan() || b < 0.0 || !b.is_finite()) {
            return Err(Error::Validation("beta must be finite and >= 0".into()));
        }
        if delta.iter().any(|&d| !d.is_finite()) {
            return Err(Error::Validation("delta contains NaN or Inf".into()));
        }
        if support_radius.is_nan() || support_radius <= 0.0 || support_radius >= grid.half_extent(0) {
            return Err(Error::Validation(format!(
                "support radius {support_radius} must lie inside the half-extent {}",
                grid.half_extent(0)
            )));
        }
        for flat in 0..grid.len() {
            if grid.radius_sq_of(flat) > support_radius * support_radius
                && (delta[flat] != 0.0 || beta[flat] != 0.0)
            {
                return Err(Error::Support(format!(
                    "volume sample {flat} nonzero outside declared radius {support_radius}"
                )));
            }
        }
        Ok(Volume {
            delta,
            beta,
            grid,
            support_radius,
        })
    }

    /// Detector grid along one lateral axis of the slice.
    pub fn detector_grid(&self) -> Grid {
        Grid::new_1d(self.grid.n(0), self.grid.spacing(0)).expect("square volume grid")
    }
}

/// Per-angle line-integral data, row-major `[angle][detector sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub angles: Vec<f64>,
    pub detector: Grid,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn new(angles: Vec<f64>, detector: Grid, values: Vec<f64>) -> Result<Self> {
        if detector.ndim() != 1 {
            return Err(Error::Validation("detector grid must be 1-D".into()));
        }
        if values.len() != angles.len() * detector.len() {
            return Err(Error::Validation("sinogram sample count mismatch".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("sinogram contains NaN or Inf".into()));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("angles must be strictly increasing".into()));
        }
        Ok(Sinogram {
            angles,
            detector,
            values,
        })
    }

    pub fn row(&self, angle_index: usize) -> &[f64] {
        let n = self.detector.len();
        &self.values[angle_index * n..(angle_index + 1) * n]
    }
}

fn bilinear(values: &[f64], grid: &Grid, u0: f64, u1: f64) -> f64 {
    let (n0, n1) = (grid.n(0), grid.n(1));
    let f0 = u0 / grid.spacing(0) + (n0 / 2) as f64;
    let f1 = u1 / grid.spacing(1) + (n1 / 2) as f64;
    if f0 < 0.0 || f1 < 0.0 {
        return 0.0;
    }
    let (i0, i1) = (f0.floor() as usize, f1.floor() as usize);
    if i0 + 1 >= n0 || i1 + 1 >= n1 {
        return 0.0;
    }
    let (t0, t1) = (f0 - i0 as f64, f1 - i1 as f64);
    let v00 = values[i0 * n1 + i1];
    let v01 = values[i0 * n1 + i1 + 1];
    let v10 = values[(i0 + 1) * n1 + i1];
    let v11 = values[(i0 + 1) * n1 + i1 + 1];
    v00 * (1.0 - t0) * (1.0 - t1) + v01 * (1.0 - t0) * t1 + v10 * t0 * (1.0 - t1) + v11 * t0 * t1
}

/// Line integrals of one 2-D field at one angle: bilinear interpolation
/// along the perpendicular direction, half-pixel steps, trapezoid rule.
fn radon_row(values: &[f64], grid: &Grid, theta: f64, detector: &Grid) -> Vec<f64> {
    let (dir0, dir1) = (theta.cos(), theta.sin());
    let (perp0, perp1) = (-dir1, dir0);
    let reach = grid.half_extent(0).min(grid.half_extent(1));
    let step = grid.spacing(0).min(grid.spacing(1)) / 2.0;
    let n_steps = (2.0 * reach / step).ceil() as usize;
    let mut out = Vec::with_capacity(detector.len());
    for s_idx in 0..detector.len() {
        let s = detector.position(0, s_idx);
        let mut acc = 0.0;
        for t_idx in 0..=n_steps {
            let t = -reach + t_idx as f64 * step;
            let w = if t_idx == 0 || t_idx == n_steps { 0.5 } else { 1.0 };
            acc += w * bilinear(values, grid, s * dir0 + t * perp0, s * dir1 + t * perp1);
        }
        out.push(acc * step);
    }
    out
}

/// Radon transform of a compactly supported 2-D field over a set of angles.
pub fn radon_2d(f: &RealImage, angles: &[f64], detector: &Grid) -> Result<Sinogram> {
    if f.grid.ndim() != 2 {
        return Err(Error::Validation("radon input must be 2-D".into()));
    }
    if detector.ndim() != 1 {
        return Err(Error::Validation("detector grid must be 1-D".into()));
    }
    let disc = f.grid.half_extent(0).min(f.grid.half_extent(1));
    let peak = f.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for flat in 0..f.grid.len() {
        if f.grid.radius_sq_of(flat) > disc * disc && f.values[flat].abs() > 1e-12 * peak {
            return Err(Error::Support(format!(
                "sample {flat} nonzero outside the reconstruction disc of radius {disc}"
            )));
        }
    }
    let mut values = Vec::with_capacity(angles.len() * detector.len());
    for &theta in angles {
        values.extend(radon_row(&f.values, &f.grid, theta, detector));
    }
    Sinogram::new(angles.to_vec(), detector.clone(), values)
}

/// Phase and absorption projections of a slice at one incident angle, and
/// the resulting 1-D transmission function.
pub fn project_volume(
    v: &Volume,
    theta: f64,
    k: f64,
) -> Result<(PhaseAbsorptionProjection, TransmissionFunction)> {
    let detector = v.detector_grid();
    let phi: Vec<f64> = radon_row(&v.delta, &v.grid, theta, &detector)
        .iter()
        .map(|&r| k * r)
        .collect();
    let mu: Vec<f64> = radon_row(&v.beta, &v.grid, theta, &detector)
        .iter()
        .map(|&r| (k * r).max(0.0))
        .collect();
    let proj = PhaseAbsorptionProjection::new(detector.clone(), phi, mu)?;
    let o = transmission_from_projection(&proj);
    // widen the support to the declared disc: interpolation smears the
    // projected footprint by up to two samples
    let support = SupportBox::from_radius(&detector, v.support_radius + 2.0 * detector.spacing(0));
    let o = TransmissionFunction::new(o.field, support)?;
    Ok((proj, o))
}

/// Largest refractive line integral `k R_theta(delta)` over a dense angle
/// set (180 angles); errors with the violating ray when it reaches `2 pi`
/// or turns negative.
pub fn check_no_phase_wrap(v: &Volume, k: f64) -> Result<f64> {
    let detector = v.detector_grid();
    let mut max = f64::NEG_INFINITY;
    for i in 0..180 {
        let theta = i as f64 * std::f64::consts::PI / 180.0;
        let row = radon_row(&v.delta, &v.grid, theta, &detector);
        for (j, &r) in row.iter().enumerate() {
            let value = k * r;
            if !(-1e-12..crate::grid::TAU).contains(&value) {
                return Err(Error::PhaseWrap {
                    theta,
                    x: detector.position(0, j),
                    value,
                });
            }
            max = max.max(value);
        }
    }
    Ok(max)
}

/// Phases this close above zero count as reconstruction noise around an
/// unscattered sample rather than a nearly full turn of phase.
const BRANCH_GUARD: f64 = 0.1;

/// Complex line integrals from a 1-D transmission function: the branch with
/// `Im(log o) in (-2 pi, 0]` gives `R(delta) = -Im(log o)/k` and
/// `R(beta) = -Re(log o)/k`. Phases within [`BRANCH_GUARD`] above zero are
/// kept as small negatives of `R(delta)` instead of being wrapped, so
/// solver noise at unscattered samples cannot masquerade as a full turn.
pub fn log_transmission(o: &TransmissionFunction, k: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r_delta = Vec::with_capacity(o.field.values.len());
    let mut r_beta = Vec::with_capacity(o.field.values.len());
    for &v in &o.field.values {
        let modulus = v.norm();
        if modulus < 1e-14 {
            return Err(Error::ZeroTransmission(modulus));
        }
        let mut log = v.ln();
        if log.im > BRANCH_GUARD {
            log.im -= crate::grid::TAU;
        }
        r_delta.push(-log.im / k);
        r_beta.push(-log.re / k);
    }
    Ok((r_delta, r_beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbpFilter {
    /// Band-limited ramp.
    RamLak,
    /// Ramp with a Hann rolloff.
    Hann,
}

/// Filtered backprojection with the band-limited ramp kernel; linear in the
/// sinogram. Requires at least two uniformly spaced angles.
pub fn fbp_reconstruct(s: &Sinogram, filter: FbpFilter) -> Result<RealImage> {
    let n_angles = s.angles.len();
    if n_angles < 2 {
        return Err(Error::Validation(format!(
            "filtered backprojection needs >= 2 angles, got {n_angles}"
        )));
    }
    let spacing = s.angles[1] - s.angles[0];
    for w in s.angles.windows(2) {
        if ((w[1] - w[0]) - spacing).abs() > 1e-9 * spacing.abs().max(1e-9) {
            return Err(Error::Validation("angle spacing must be uniform".into()));
        }
    }
    let n = s.detector.len();
    let ds = s.detector.spacing(0);
    let len = (2 * n).next_power_of_two();
    let center = len / 2;

    // band-limited ramp response placed on the centered grid:
    // 1/(4 ds^2) at offset 0, -1/(pi^2 j^2 ds^2) at odd offsets
    let mut kernel = vec![Complex64::ZERO; len];
    kernel[center] = Complex64::new(1.0 / (4.0 * ds * ds), 0.0);
    for j in (1..n).step_by(2) {
        let v = -1.0 / (std::f64::consts::PI * std::f64::consts::PI * (j * j) as f64 * ds * ds);
        kernel[center + j] = Complex64::new(v, 0.0);
        kernel[center - j] = Complex64::new(v, 0.0);
    }
    let pad_grid = Grid::new_1d(len, 1.0).unwrap();
    let mut kernel_hat = fourier_transform(&ComplexField {
        grid: pad_grid.clone(),
        values: kernel,
    });
    if filter == FbpFilter::Hann {
        for (l, v) in kernel_hat.values.iter_mut().enumerate() {
            let f = (l as f64 - center as f64).abs() / center as f64;
            *v *= 0.5 * (1.0 + (std::f64::consts::PI * f).cos());
        }
    }

    // circular convolution row * kernel via the centered transform pair:
    // sqrt(2 pi) Finv(F(row) F(kernel)) with unit padded spacing
    let mut filtered = vec![0.0; n_angles * n];
    let conv_scale = crate::grid::TAU.sqrt() * ds;
    for a in 0..n_angles {
        let mut row = vec![Complex64::ZERO; len];
        for (j, &v) in s.row(a).iter().enumerate() {
            row[j] = Complex64::new(v, 0.0);
        }
        let row_hat = fourier_transform(&ComplexField {
            grid: pad_grid.clone(),
            values: row,
        });
        let conv = inverse_fourier_transform(&row_hat.hadamard(&kernel_hat));
        for j in 0..n {
            filtered[a * n + j] = conv.values[j].re * conv_scale;
        }
    }

    // backproject with linear interpolation in the detector coordinate
    let out_grid = Grid::new_square(n, ds).unwrap();
    let mut values = vec![0.0; out_grid.len()];
    let dtheta = spacing;
    for a in 0..n_angles {
        let (c, si) = (s.angles[a].cos(), s.angles[a].sin());
        let row = &filtered[a * n..(a + 1) * n];
        for r in 0..n {
            let x0 = out_grid.position(0, r);
            for col in 0..n {
                let x1 = out_grid.position(1, col);
                let f = (x0 * c + x1 * si) / ds + (n / 2) as f64;
                if f < 0.0 {
                    continue;
                }
                let i = f.floor() as usize;
                if i + 1 >= n {
                    continue;
                }
                let t = f - i as f64;
                values[r * n + col] += dtheta * (row[i] * (1.0 - t) + row[i + 1] * t);
            }
        }
    }
    RealImage::new(out_grid, values)
}

/// Holographic intensities of a volume slice at every angle; m = 1
/// geometry. `allow_wrap` skips the phase-wrap validator for experiments.
pub fn tomo_forward(
    v: &Volume,
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
    angles: &[f64],
    allow_wrap: bool,
) -> Result<Vec<RealImage>> {
    geom.validate()?;
    if geom.m != 1 {
        return Err(Error::Validation(
            "tomographic forward model works on 1-D lateral slices (m = 1)".into(),
        ));
    }
    if (v.grid.spacing(0) - geom.pixel).abs() > 1e-12 * geom.pixel {
        return Err(Error::GridMismatch(format!(
            "volume spacing {} differs from geometry pixel {}",
            v.grid.spacing(0),
            geom.pixel
        )));
    }
    if !allow_wrap {
        check_no_phase_wrap(v, geom.k)?;
    }
    let mut images = Vec::with_capacity(angles.len());
    for &theta in angles {
        let (_, o) = project_volume(v, theta, geom.k)?;
        images.push(holographic_intensity(&o, probe, geom)?);
    }
    Ok(images)
}

/// Radially symmetric `cos^4` bump phantom with prescribed peak line
/// integrals `k R(delta)` and `k R(beta)` through the center.
pub fn smooth_blob_volume(
    grid: &Grid,
    blob_radius: f64,
    peak_k_r_delta: f64,
    peak_k_r_beta: f64,
    k: f64,
) -> Result<Volume> {
    if blob_radius.is_nan() || blob_radius <= 0.0 {
        return Err(Error::Validation("blob radius must be positive".into()));
    }
    // central chord of the cos^4 profile integrates to 3 r0 / 4
    let chord = 0.75 * blob_radius;
    let amp_delta = peak_k_r_delta / (k * chord);
    let amp_beta = peak_k_r_beta / (k * chord);
    let mut delta = vec![0.0; grid.len()];
    let mut beta = vec![0.0; grid.len()];
    for flat in 0..grid.len() {
        let r = grid.radius_sq_of(flat).sqrt();
        if r < blob_radius {
            let c = (std::f64::consts::PI * r / (2.0 * blob_radius)).cos();
            let profile = c * c * c * c;
            delta[flat] = amp_delta * profile;
            beta[flat] = amp_beta * profile;
        }
    }
    Volume::new(
        grid.clone(),
        delta,
        beta,
        (blob_radius + 2.0 * grid.spacing(0)).min(grid.half_extent(0) * 0.999),
    )
}
