//! Object models and measurement operators.
//!
//! The projection approximation turns a sample into the object transmission
//! function `O = exp(-i phi - mu)` applied multiplicatively to the probe at
//! the exit surface; `phi = k Int delta dz` collects refractive phase and
//! `mu = k Int beta dz` attenuation. The detector sees the holographic
//! intensity `I = |D(P . O)|^2`. In dimensionless coordinates the same
//! measurement reads `|R + F(w_F . h)|^2` in terms of the compact
//! perturbation `h = p (o - 1)` and the reference term `R`; the abstract
//! operators here generalize the weight to any everywhere-nonzero `w`:
//!
//! ```text
//! F(h)     = |R + F(w.h)|^2                     (nonlinear intensity map)
//! F_lin(h) = F(h) - |F(w.h)|^2
//!          = |R|^2 + 2 Re(conj(R) F(w.h))       (weak-object linearization)
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{crop_field, fourier_transform, pad_field};
use crate::field::{ComplexField, RealImage};
use crate::grid::Grid;
use crate::optics::{
    empty_beam_intensity, fresnel_propagate_multiplier, probe_object_field, reference_term,
    ImagingGeometry, ProbeSpec, WeightSpec,
};

/// Half-open index box per axis outside which an object is trivial
/// (transmission 1, perturbation 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl SupportBox {
    pub fn full(grid: &Grid) -> SupportBox {
        SupportBox {
            lo: vec![0; grid.ndim()],
            hi: grid.shape().to_vec(),
        }
    }

    /// Centered box of `len` samples per axis.
    pub fn centered(grid: &Grid, len: usize) -> Result<SupportBox> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for axis in 0..grid.ndim() {
            let n = grid.n(axis);
            if len > n {
                return Err(Error::Validation(format!(
                    "support box of {len} exceeds grid axis {axis} of {n}"
                )));
            }
            lo.push((n - len) / 2);
            hi.push((n - len) / 2 + len);
        }
        Ok(SupportBox { lo, hi })
    }

    /// Smallest box containing all samples within `radius` of the center.
    pub fn from_radius(grid: &Grid, radius: f64) -> SupportBox {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for axis in 0..grid.ndim() {
            let n = grid.n(axis);
            let half = n / 2;
            let count = (radius / grid.spacing(axis)).floor() as usize + 1;
            lo.push(half.saturating_sub(count));
            hi.push((half + count + 1).min(n));
        }
        SupportBox { lo, hi }
    }

    pub fn contains_flat(&self, grid: &Grid, flat: usize) -> bool {
        match grid.ndim() {
            1 => self.lo[0] <= flat && flat < self.hi[0],
            _ => {
                let n1 = grid.n(1);
                let (r, c) = (flat / n1, flat % n1);
                self.lo[0] <= r && r < self.hi[0] && self.lo[1] <= c && c < self.hi[1]
            }
        }
    }

    /// Number of samples inside the box.
    pub fn len(&self) -> usize {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| h.saturating_sub(l))
            .product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat row-major indices of the box samples, in order.
    pub fn flat_indices(&self, grid: &Grid) -> Vec<usize> {
        match grid.ndim() {
            1 => (self.lo[0]..self.hi[0]).collect(),
            _ => {
                let n1 = grid.n(1);
                let mut out = Vec::with_capacity(self.len());
                for r in self.lo[0]..self.hi[0] {
                    for c in self.lo[1]..self.hi[1] {
                        out.push(r * n1 + c);
                    }
                }
                out
            }
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if self.lo.len() != grid.ndim() || self.hi.len() != grid.ndim() {
            return Err(Error::Validation("support box dimensionality mismatch".into()));
        }
        for axis in 0..grid.ndim() {
            if self.lo[axis] > self.hi[axis] || self.hi[axis] > grid.n(axis) {
                return Err(Error::Validation(format!(
                    "support box [{}, {}) outside grid axis {axis} of {}",
                    self.lo[axis],
                    self.hi[axis],
                    grid.n(axis)
                )));
            }
        }
        Ok(())
    }
}

/// Projected phase `phi = k Int delta dz` and attenuation `mu = k Int beta dz`
/// on a lateral grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAbsorptionProjection {
    pub grid: Grid,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
}

impl PhaseAbsorptionProjection {
    pub fn new(grid: Grid, phi: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.len() || mu.len() != grid.len() {
            return Err(Error::Validation("projection length mismatch".into()));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("phi contains NaN or Inf".into()));
        }
        if mu.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(
                "mu must be finite and >= 0 (physical absorption)".into(),
            ));
        }
        Ok(PhaseAbsorptionProjection { grid, phi, mu })
    }

    /// Bounding box of the samples where (phi, mu) is nonzero.
    pub fn support(&self) -> SupportBox {
        let grid = &self.grid;
        let mut lo = grid.shape().to_vec();
        let mut hi = vec![0usize; grid.ndim()];
        for flat in 0..grid.len() {
            if self.phi[flat] != 0.0 || self.mu[flat] != 0.0 {
                let idx: Vec<usize> = match grid.ndim() {
                    1 => vec![flat],
                    _ => vec![flat / grid.n(1), flat % grid.n(1)],
                };
                for axis in 0..grid.ndim() {
                    lo[axis] = lo[axis].min(idx[axis]);
                    hi[axis] = hi[axis].max(idx[axis] + 1);
                }
            }
        }
        if hi.iter().all(|&h| h == 0) {
            // empty object: collapse to an empty centered box
            return SupportBox {
                lo: grid.shape().iter().map(|&n| n / 2).collect(),
                hi: grid.shape().iter().map(|&n| n / 2).collect(),
            };
        }
        SupportBox { lo, hi }
    }
}

/// Complex multiplicative object factor, identically 1 outside its support.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionFunction {
    pub field: ComplexField,
    pub support: SupportBox,
}

impl TransmissionFunction {
    pub fn new(field: ComplexField, support: SupportBox) -> Result<Self> {
        support.validate(&field.grid)?;
        for flat in 0..field.grid.len() {
            if !support.contains_flat(&field.grid, flat)
                && (field.values[flat] - Complex64::ONE).norm() > 1e-12
            {
                return Err(Error::Validation(format!(
                    "transmission differs from 1 outside the support box at sample {flat}"
                )));
            }
        }
        Ok(TransmissionFunction { field, support })
    }

    pub fn empty(grid: Grid) -> Self {
        let support = SupportBox {
            lo: grid.shape().iter().map(|&n| n / 2).collect(),
            hi: grid.shape().iter().map(|&n| n / 2).collect(),
        };
        TransmissionFunction {
            field: ComplexField::constant(grid, Complex64::ONE),
            support,
        }
    }
}

/// Compactly supported perturbation `h = p (o - 1)`; samples outside the
/// declared box are forced to zero so compact support is an invariant
/// rather than an assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub field: ComplexField,
    pub support: SupportBox,
}

impl Perturbation {
    pub fn new(mut field: ComplexField, support: SupportBox) -> Result<Self> {
        support.validate(&field.grid)?;
        for flat in 0..field.grid.len() {
            if !support.contains_flat(&field.grid, flat) {
                field.values[flat] = Complex64::ZERO;
            }
        }
        Ok(Perturbation { field, support })
    }

    pub fn zeros(grid: Grid, support: SupportBox) -> Result<Self> {
        Perturbation::new(ComplexField::zeros(grid), support)
    }
}

/// `o = exp(-mu) exp(-i phi)`, the object transmission function.
pub fn transmission_from_projection(proj: &PhaseAbsorptionProjection) -> TransmissionFunction {
    let values = proj
        .phi
        .iter()
        .zip(&proj.mu)
        .map(|(&phi, &mu)| Complex64::from_polar((-mu).exp(), -phi))
        .collect();
    TransmissionFunction {
        field: ComplexField {
            grid: proj.grid.clone(),
            values,
        },
        support: proj.support(),
    }
}

/// Disc phantom: `phi = phi_in`, `mu = mu_in` on `|x| < radius`, zero
/// outside. Hard-edged by default; `smooth_edge` applies a one-pixel cosine
/// ramp for convergence studies.
pub fn phantom_disc(
    grid: &Grid,
    radius: f64,
    phi_in: f64,
    mu_in: f64,
    smooth_edge: bool,
) -> Result<PhaseAbsorptionProjection> {
    if radius < 0.0 || !radius.is_finite() {
        return Err(Error::Validation(format!("disc radius {radius} invalid")));
    }
    if mu_in < 0.0 {
        return Err(Error::Validation(format!(
            "mu must be >= 0 (physical absorption), got {mu_in}"
        )));
    }
    let min_half_extent = (0..grid.ndim())
        .map(|a| grid.half_extent(a))
        .fold(f64::INFINITY, f64::min);
    if 2.0 * radius > min_half_extent {
        return Err(Error::Validation(format!(
            "disc of radius {radius} needs a margin >= radius inside half-extent {min_half_extent}"
        )));
    }
    let pixel = grid.spacing(0);
    let mut phi = vec![0.0; grid.len()];
    let mut mu = vec![0.0; grid.len()];
    for flat in 0..grid.len() {
        let r = grid.radius_sq_of(flat).sqrt();
        let w = if smooth_edge {
            let t = (r - radius) / pixel;
            if t <= -0.5 {
                1.0
            } else if t >= 0.5 {
                0.0
            } else {
                0.5 * (1.0 - (std::f64::consts::PI * t).sin())
            }
        } else if r < radius {
            1.0
        } else {
            0.0
        };
        phi[flat] = phi_in * w;
        mu[flat] = mu_in * w;
    }
    PhaseAbsorptionProjection::new(grid.clone(), phi, mu)
}

fn require_physical_probe(probe: &ProbeSpec) -> Result<()> {
    probe.validate()?;
    if !probe.is_physical() {
        return Err(Error::Probe(
            "compact probe arrays have no physical-plane beam; \
             use the measurement operators instead"
                .into(),
        ));
    }
    Ok(())
}

fn check_object_grid(o: &TransmissionFunction, geom: &ImagingGeometry) -> Result<()> {
    geom.validate()?;
    if o.field.grid.ndim() != geom.m {
        return Err(Error::GridMismatch(format!(
            "object has {} axes, geometry expects m = {}",
            o.field.grid.ndim(),
            geom.m
        )));
    }
    for axis in 0..o.field.grid.ndim() {
        let s = o.field.grid.spacing(axis);
        if (s - geom.pixel).abs() > 1e-12 * geom.pixel {
            return Err(Error::GridMismatch(format!(
                "object spacing {s} on axis {axis} differs from geometry pixel {}",
                geom.pixel
            )));
        }
    }
    Ok(())
}

/// Exit wave `P . O` embedded in a grid enlarged by `pad_factor` (new samples
/// carry the unscattered probe) and propagated to the detector plane.
pub fn propagated_exit_wave(
    o: &TransmissionFunction,
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
    pad_factor: usize,
) -> Result<ComplexField> {
    require_physical_probe(probe)?;
    check_object_grid(o, geom)?;
    let exit = exit_wave_padded(o, probe, geom, pad_factor)?;
    fresnel_propagate_multiplier(&exit, geom, geom.d)
}

/// Object-plane probe field on a padded copy of the object grid.
fn probe_field_padded(
    object_grid: &Grid,
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
    pad_factor: usize,
) -> Result<ComplexField> {
    let padded = pad_field(&ComplexField::zeros(object_grid.clone()), pad_factor, Complex64::ZERO)?;
    match probe {
        ProbeSpec::PlaneWave { p0 } => Ok(ComplexField::constant(padded.grid, *p0)),
        ProbeSpec::Gaussian { .. } => {
            let xi_grid = geom.dimensionless_grid(&padded.grid)?;
            let p_obj = probe_object_field(probe, &xi_grid)?;
            Ok(ComplexField {
                grid: padded.grid,
                values: p_obj.values,
            })
        }
        ProbeSpec::CustomCompact { .. } => Err(Error::Probe(
            "compact probe arrays have no physical-plane beam".into(),
        )),
    }
}

/// Padded exit wave `P . O` before propagation.
pub fn exit_wave_padded(
    o: &TransmissionFunction,
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
    pad_factor: usize,
) -> Result<ComplexField> {
    require_physical_probe(probe)?;
    check_object_grid(o, geom)?;
    let o_padded = pad_field(&o.field, pad_factor, Complex64::ONE)?;
    let p = probe_field_padded(&o.field.grid, probe, geom, pad_factor)?;
    Ok(o_padded.hadamard(&p))
}

/// Holographic intensity `|D(P . O)|^2` on the detector window (the object
/// grid), simulated with internal padding factor 2.
pub fn holographic_intensity(
    o: &TransmissionFunction,
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
) -> Result<RealImage> {
    let detector_field = propagated_exit_wave(o, probe, geom, 2)?;
    let window = crop_field(&detector_field, &o.field.grid)?;
    Ok(window.intensity())
}

fn weighted_spectrum(h: &Perturbation, weight: &WeightSpec) -> Result<ComplexField> {
    let w = weight.evaluate(&h.field.grid)?;
    Ok(fourier_transform(&w.hadamard(&h.field)))
}

/// Nonlinear intensity map `|R + F(w.h)|^2` on the dual grid.
pub fn intensity_operator(
    h: &Perturbation,
    probe: &ProbeSpec,
    weight: &WeightSpec,
) -> Result<RealImage> {
    let spectrum = weighted_spectrum(h, weight)?;
    let reference = reference_term(probe, &spectrum.grid)?;
    Ok(reference.zip_map(&spectrum, |r, g| r + g).intensity())
}

/// Weak-object linearization `|R|^2 + 2 Re(conj(R) F(w.h))`; identical to
/// `intensity_operator(h) - |F(w.h)|^2` and real-affine in `h`. Values may
/// legitimately go negative: the interference term is unbounded below.
pub fn linearized_intensity_operator(
    h: &Perturbation,
    probe: &ProbeSpec,
    weight: &WeightSpec,
) -> Result<RealImage> {
    let spectrum = weighted_spectrum(h, weight)?;
    let reference = reference_term(probe, &spectrum.grid)?;
    let values = reference
        .values
        .iter()
        .zip(&spectrum.values)
        .map(|(r, g)| r.norm_sqr() + 2.0 * (r.conj() * g).re)
        .collect();
    Ok(RealImage {
        grid: spectrum.grid,
        values,
        mask: None,
    })
}

/// Linearized physical intensity `I_lin = I - |D(P (O - 1))|^2`, the
/// weak-scattering limit of [`holographic_intensity`]. May be negative.
pub fn intensity_linearized(
    o: &TransmissionFunction,
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
) -> Result<RealImage> {
    require_physical_probe(probe)?;
    check_object_grid(o, geom)?;
    let full = holographic_intensity(o, probe, geom)?;

    // scattered part: P (O - 1), padding fills with zero
    let o_padded = pad_field(&o.field, 2, Complex64::ONE)?;
    let p = probe_field_padded(&o.field.grid, probe, geom, 2)?;
    let scattered_exit = o_padded.zip_map(&p, |ov, pv| pv * (ov - Complex64::ONE));
    let scattered_det = fresnel_propagate_multiplier(&scattered_exit, geom, geom.d)?;
    let scattered = crop_field(&scattered_det, &o.field.grid)?.intensity();

    let values = full
        .values
        .iter()
        .zip(&scattered.values)
        .map(|(&a, &b)| a - b)
        .collect();
    Ok(RealImage {
        grid: full.grid,
        values,
        mask: None,
    })
}

/// `h = p (o - 1)` on the dimensionless grid implied by the geometry.
pub fn perturbation_from_transmission(
    o: &TransmissionFunction,
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
) -> Result<Perturbation> {
    check_object_grid(o, geom)?;
    let xi_grid = geom.dimensionless_grid(&o.field.grid)?;
    let p = probe_object_field(probe, &xi_grid)?;
    let values = o
        .field
        .values
        .iter()
        .zip(&p.values)
        .map(|(&ov, &pv)| pv * (ov - Complex64::ONE))
        .collect();
    Perturbation::new(
        ComplexField {
            grid: xi_grid,
            values,
        },
        o.support.clone(),
    )
}

/// Flat-field normalization: pointwise division by the empty-beam intensity
/// `|D(P)|^2`.
pub fn flat_field_normalize(
    intensity: &RealImage,
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
) -> Result<RealImage> {
    let beam = empty_beam_intensity(probe, geom, &intensity.grid)?;
    let max = beam.max();
    let min = beam.min();
    let threshold = 1e-14 * max;
    if min.is_nan() || min <= threshold {
        return Err(Error::DivisionByNearZero { min, threshold });
    }
    Ok(RealImage {
        grid: intensity.grid.clone(),
        values: intensity
            .values
            .iter()
            .zip(&beam.values)
            .map(|(&i, &b)| i / b)
            .collect(),
        mask: intensity.mask.clone(),
    })
}
