//! Fresnel propagation, probe beams, and detector reference terms.
//!
//! # The two propagator forms
//!
//! Paraxial free-space propagation of a scalar envelope over a distance `d`
//! at wavenumber `k` is the Fresnel integral (here in `m` lateral
//! dimensions):
//!
//! ```text
//! D_d(psi)(x) = e^{i(kd - m pi/4)} (k / 2 pi d)^{m/2} e^{i k x^2 / 2d}
//!               * Int psi(x') e^{i k x'^2 / 2d} e^{-i k x.x' / d} dx'
//! ```
//!
//! Two numerically distinct but analytically equivalent realizations are
//! provided.
//!
//! **Multiplier form** ([`fresnel_propagate_multiplier`]): propagation is a
//! Fourier multiplier,
//!
//! ```text
//! D_d(psi) = Finv[ e^{ikd} e^{-i d |sigma|^2 / 2k} F(psi)(sigma) ].
//! ```
//!
//! Equivalence: both sides are linear, so it suffices to check them on plane
//! waves `psi(x) = e^{i sigma x}` (1-D shown). The multiplier form returns
//! `e^{ikd} e^{-i d sigma^2/2k} e^{i sigma x}` by construction. In the
//! integral form, complete the square using the Gaussian-chirp integral
//! `Int e^{i a x'^2/2} e^{i b x'} dx' = (2 pi / a)^{1/2} e^{i pi/4}
//! e^{-i b^2 / 2a}` (a > 0), with `a = k/d` and `b = sigma - kx/d`:
//!
//! ```text
//! e^{i(kd - pi/4)} (k/2 pi d)^{1/2} e^{ikx^2/2d}
//!     * (2 pi d / k)^{1/2} e^{i pi/4} e^{-i d (sigma - kx/d)^2 / 2k}
//!   = e^{ikd} e^{ikx^2/2d} e^{-i d sigma^2/2k} e^{i sigma x} e^{-ikx^2/2d}
//!   = e^{ikd} e^{-i d sigma^2/2k} e^{i sigma x}.
//! ```
//!
//! The cross terms of the square cancel the outer chirp exactly, so the two
//! operators agree. On the grid the multiplier has unit modulus, which makes
//! this form exactly unitary, an exact semigroup in `d`, and exactly
//! invertible by negating `d`; it is the workhorse for deep near-field
//! simulation where the multiplier phase `d sigma^2/2k` is slowly varying.
//!
//! **Chirp form** ([`fresnel_propagate_chirp`]): in dimensionless coordinates
//! `xi = (k/d)^{1/2} x` the same operator factorizes through one transform,
//!
//! ```text
//! D(psi_0) = gamma e^{ikd} w_F . F(w_F . psi_0),     w_F(xi) = e^{i xi^2/2},
//! ```
//!
//! with `gamma = e^{-i m pi/4}` (substitute `xi` in the integral above). This
//! form delivers the output on the dual grid and is the faithful realization
//! of the holographic measurement algebra at moderate grid sizes; input and
//! output grids coincide exactly when `dxi = (2 pi / n)^{1/2}` (critical
//! sampling).
//!
//! Each form aliases in the other's comfortable regime, so the applicable
//! sampling criterion is enforced as a hard error rather than a warning:
//! silently aliased chirps produce plausible-looking wrong holograms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fourier_transform, inverse_fourier_transform};
use crate::field::{ComplexField, RealImage};
use crate::grid::Grid;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `gamma = e^{-i m pi/4}` for `m` lateral dimensions.
pub fn gamma_factor(m: usize) -> Complex64 {
    Complex64::from_polar(1.0, -(m as f64) * std::f64::consts::FRAC_PI_4)
}

/// Wavenumber, propagation distance, detector pixel, and lateral dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagingGeometry {
    /// Wavenumber [1/length].
    pub k: f64,
    /// Object-to-detector distance [length].
    pub d: f64,
    /// Physical lateral sample spacing [length].
    pub pixel: f64,
    /// Lateral dimension, 1 or 2.
    pub m: usize,
}

impl ImagingGeometry {
    pub fn new(k: f64, d: f64, pixel: f64, m: usize) -> Result<Self> {
        let geom = ImagingGeometry { k, d, pixel, m };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Validation(format!("k must be > 0, got {}", self.k)));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::Validation(format!("d must be > 0, got {}", self.d)));
        }
        if !(self.pixel > 0.0 && self.pixel.is_finite()) {
            return Err(Error::Validation(format!(
                "pixel must be > 0, got {}",
                self.pixel
            )));
        }
        if self.m != 1 && self.m != 2 {
            return Err(Error::Validation(format!(
                "lateral dimension must be 1 or 2, got {}",
                self.m
            )));
        }
        Ok(())
    }

    /// Conversion factor `(k/d)^{1/2}` from physical `x` to dimensionless `xi`.
    pub fn xi_scale(&self) -> f64 {
        (self.k / self.d).sqrt()
    }

    /// Dimensionless lateral spacing `(k/d)^{1/2} * pixel`.
    pub fn dimensionless_spacing(&self) -> f64 {
        self.xi_scale() * self.pixel
    }

    /// Dimensionless counterpart of a physical grid with this pixel size.
    pub fn dimensionless_grid(&self, physical: &Grid) -> Result<Grid> {
        for axis in 0..physical.ndim() {
            let s = physical.spacing(axis);
            if (s - self.pixel).abs() > 1e-12 * self.pixel {
                return Err(Error::GridMismatch(format!(
                    "grid spacing {s} on axis {axis} differs from geometry pixel {}",
                    self.pixel
                )));
            }
        }
        Ok(physical.scaled(self.xi_scale()))
    }

    /// Distance at which an n-sample grid of this pixel size is critically
    /// sampled for the chirp form, `d = n k pixel^2 / 2 pi`.
    pub fn critical_distance(k: f64, pixel: f64, n: usize) -> f64 {
        n as f64 * k * pixel * pixel / crate::grid::TAU
    }
}

/// Incident illumination model.
///
/// Plane waves and Gaussian beams are parametrized by their propagated form
/// in the detector plane: a Gaussian beam arrives as
/// `p0 e^{ikd} e^{alpha0 xi^2}` with `Re(alpha0) < 0`, and `Im(alpha0) <= 0`
/// when the focus lies upstream of the detector (divergent beam). The
/// compact-array variant feeds the abstract measurement operators directly:
/// its reference term is `F(p_check) e^{alpha xi^2}` with nonreal `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeSpec {
    PlaneWave {
        p0: Complex64,
    },
    Gaussian {
        p0: Complex64,
        alpha0: Complex64,
    },
    CustomCompact {
        p_check: ComplexField,
        alpha: Complex64,
    },
}

impl ProbeSpec {
    pub fn plane_wave(p0: Complex64) -> Result<Self> {
        let p = ProbeSpec::PlaneWave { p0 };
        p.validate()?;
        Ok(p)
    }

    pub fn gaussian(p0: Complex64, alpha0: Complex64) -> Result<Self> {
        let p = ProbeSpec::Gaussian { p0, alpha0 };
        p.validate()?;
        Ok(p)
    }

    pub fn custom_compact(p_check: ComplexField, alpha: Complex64) -> Result<Self> {
        let p = ProbeSpec::CustomCompact { p_check, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProbeSpec::PlaneWave { p0 } => {
                if p0.norm() == 0.0 || !p0.re.is_finite() || !p0.im.is_finite() {
                    return Err(Error::Probe("plane wave needs p0 != 0".into()));
                }
            }
            ProbeSpec::Gaussian { p0, alpha0 } => {
                if p0.norm() == 0.0 {
                    return Err(Error::Probe("gaussian needs p0 != 0".into()));
                }
                if alpha0.re.is_nan() || alpha0.re >= 0.0 {
                    return Err(Error::Probe(format!(
                        "gaussian needs Re(alpha0) < 0, got {}",
                        alpha0.re
                    )));
                }
                if alpha0.im.is_nan() || alpha0.im > 0.0 {
                    return Err(Error::Probe(format!(
                        "divergent gaussian needs Im(alpha0) <= 0, got {}",
                        alpha0.im
                    )));
                }
            }
            ProbeSpec::CustomCompact { p_check, alpha } => {
                if p_check.values.iter().all(|v| v.norm() == 0.0) {
                    return Err(Error::Probe("compact probe array is identically zero".into()));
                }
                if alpha.im == 0.0 {
                    return Err(Error::Probe("compact probe needs Im(alpha) != 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Probes with a closed-form physical beam (plane wave or Gaussian).
    pub fn is_physical(&self) -> bool {
        !matches!(self, ProbeSpec::CustomCompact { .. })
    }
}

/// Weight applied to the perturbation before the transform in the
/// measurement operators: the Fresnel chirp `w_F`, or any everywhere-nonzero
/// custom field.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    FresnelChirp,
    Custom(ComplexField),
}

impl WeightSpec {
    /// Everywhere-nonzero unit weight on a grid.
    pub fn unit(grid: &Grid) -> WeightSpec {
        WeightSpec::Custom(ComplexField::constant(grid.clone(), Complex64::ONE))
    }

    pub fn evaluate(&self, grid: &Grid) -> Result<ComplexField> {
        match self {
            WeightSpec::FresnelChirp => fresnel_chirp(grid),
            WeightSpec::Custom(w) => {
                if !w.grid.approx_eq(grid, 1e-12) {
                    return Err(Error::GridMismatch(
                        "custom weight grid differs from object grid".into(),
                    ));
                }
                let min = w.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
                if min.is_nan() || min <= 0.0 {
                    return Err(Error::Validation(
                        "custom weight must be nonzero everywhere".into(),
                    ));
                }
                Ok(w.clone())
            }
        }
    }
}

/// Chirp sampling criterion `|xi|_max * dxi <= pi` per axis.
pub fn chirp_criterion(grid: &Grid) -> Result<()> {
    for axis in 0..grid.ndim() {
        let xi_max = grid.half_extent(axis);
        let dxi = grid.spacing(axis);
        if xi_max * dxi > std::f64::consts::PI * (1.0 + 1e-9) {
            return Err(Error::Aliasing {
                axis,
                detail: format!(
                    "chirp undersampled: |xi|_max * dxi = {:.6} > pi",
                    xi_max * dxi
                ),
            });
        }
    }
    Ok(())
}

/// The quadratic-phase factor `w_F(xi) = exp(i |xi|^2 / 2)` sampled on a
/// dimensionless grid. Fails with an aliasing error when the grid violates
/// the chirp sampling criterion.
pub fn fresnel_chirp(grid: &Grid) -> Result<ComplexField> {
    chirp_criterion(grid)?;
    Ok(ComplexField {
        grid: grid.clone(),
        values: (0..grid.len())
            .map(|i| Complex64::from_polar(1.0, grid.radius_sq_of(i) / 2.0))
            .collect(),
    })
}

/// Fresnel propagation over `signed_distance` in the Fourier-multiplier form.
///
/// The input lives on a physical grid; negative distances propagate
/// backwards and are the exact grid inverse of the forward map.
pub fn fresnel_propagate_multiplier(
    psi: &ComplexField,
    geom: &ImagingGeometry,
    signed_distance: f64,
) -> Result<ComplexField> {
    geom.validate()?;
    if psi.grid.ndim() != geom.m {
        return Err(Error::GridMismatch(format!(
            "field has {} axes, geometry expects {}",
            psi.grid.ndim(),
            geom.m
        )));
    }
    let d = signed_distance;
    let dual = psi.grid.dual();
    for axis in 0..dual.ndim() {
        let sigma_max = dual.half_extent(axis);
        let dsigma = dual.spacing(axis);
        let increment = d.abs() * sigma_max * dsigma / geom.k;
        if increment > std::f64::consts::PI * (1.0 + 1e-9) {
            return Err(Error::Aliasing {
                axis,
                detail: format!(
                    "propagator phase undersampled: |d| sigma_max dsigma / k = {increment:.6} > pi"
                ),
            });
        }
    }
    let mut spectrum = fourier_transform(psi);
    let phase0 = geom.k * d;
    for (i, v) in spectrum.values.iter_mut().enumerate() {
        let sigma_sq = spectrum.grid.radius_sq_of(i);
        *v *= Complex64::from_polar(1.0, phase0 - d * sigma_sq / (2.0 * geom.k));
    }
    Ok(inverse_fourier_transform(&spectrum))
}

/// Fresnel propagation of a dimensionless field in the chirp-transform-chirp
/// form `gamma e^{ikd} w_F . F(w_F . psi0)`. Output lives on the dual grid.
pub fn fresnel_propagate_chirp(psi0: &ComplexField, geom: &ImagingGeometry) -> Result<ComplexField> {
    geom.validate()?;
    if psi0.grid.ndim() != geom.m {
        return Err(Error::GridMismatch(format!(
            "field has {} axes, geometry expects {}",
            psi0.grid.ndim(),
            geom.m
        )));
    }
    let inner = fresnel_chirp(&psi0.grid)?;
    let outer = fresnel_chirp(&psi0.grid.dual())?;
    let spectrum = fourier_transform(&inner.hadamard(psi0));
    let scale = gamma_factor(geom.m) * Complex64::from_polar(1.0, geom.k * geom.d);
    Ok(outer.hadamard(&spectrum).scaled(scale))
}

/// Closed-form Fresnel propagation of a Gaussian `exp(a xi^2)`, `Re(a) < 0`:
///
/// ```text
/// D(e^{a xi^2}) = c e^{ikd} e^{b xi^2},
/// c = gamma (-(2a + i))^{-m/2},   b = i a / (2a + i),
/// ```
///
/// obtained by completing the square in `F(w_F e^{a xi^2})` with the
/// principal square root. Returns `(c, b)`.
pub fn propagate_gaussian_exponent(a: Complex64, m: usize) -> (Complex64, Complex64) {
    let root = (-(2.0 * a + I)).sqrt();
    let mut c = gamma_factor(m);
    for _ in 0..m {
        c /= root;
    }
    let b = I * a / (2.0 * a + I);
    (c, b)
}

/// Object-plane form `A e^{a xi^2}` of a Gaussian beam whose propagated
/// detector-plane field is `p0 e^{ikd} e^{alpha0 xi^2}`. Returns `(A, a)`.
pub fn gaussian_object_plane(p0: Complex64, alpha0: Complex64, m: usize) -> (Complex64, Complex64) {
    let a = I * alpha0 / (I - 2.0 * alpha0);
    let (c, _) = propagate_gaussian_exponent(a, m);
    (p0 / c, a)
}

/// Chirp-normalized propagated probe `e^{-ikd} / (gamma w_F) . D(p)` sampled
/// on the detector-side (dual) grid.
///
/// Plane wave: `(p0/gamma) e^{-i xi^2/2}`. Gaussian: `(p0/gamma)
/// e^{(alpha0 - i/2) xi^2}`. Compact array: `F(p_check) e^{alpha xi^2}`,
/// which requires `grid` to be the dual of the array's grid.
pub fn reference_term(probe: &ProbeSpec, grid: &Grid) -> Result<ComplexField> {
    probe.validate()?;
    let m = grid.ndim();
    let gamma = gamma_factor(m);
    match probe {
        ProbeSpec::PlaneWave { p0 } => Ok(ComplexField {
            grid: grid.clone(),
            values: (0..grid.len())
                .map(|i| (p0 / gamma) * Complex64::from_polar(1.0, -grid.radius_sq_of(i) / 2.0))
                .collect(),
        }),
        ProbeSpec::Gaussian { p0, alpha0 } => {
            let alpha = alpha0 - I / 2.0;
            Ok(ComplexField {
                grid: grid.clone(),
                values: (0..grid.len())
                    .map(|i| (p0 / gamma) * (alpha * grid.radius_sq_of(i)).exp())
                    .collect(),
            })
        }
        ProbeSpec::CustomCompact { p_check, alpha } => {
            if !p_check.grid.dual().approx_eq(grid, 1e-9) {
                return Err(Error::GridMismatch(
                    "compact probe array must live on the dual of the requested grid".into(),
                ));
            }
            let hat = fourier_transform(p_check);
            Ok(ComplexField {
                grid: grid.clone(),
                values: hat
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (alpha * grid.radius_sq_of(i)).exp())
                    .collect(),
            })
        }
    }
}

/// Probe field in the object plane on a dimensionless grid.
///
/// Plane wave: constant `p0`. Gaussian: the closed-form back-propagated
/// beam. Compact array: reconstructed numerically from its reference term,
/// `p = Finv(F(p_check) e^{alpha xi^2}) . conj(w_F)`.
pub fn probe_object_field(probe: &ProbeSpec, grid: &Grid) -> Result<ComplexField> {
    probe.validate()?;
    match probe {
        ProbeSpec::PlaneWave { p0 } => Ok(ComplexField::constant(grid.clone(), *p0)),
        ProbeSpec::Gaussian { p0, alpha0 } => {
            let (amp, a) = gaussian_object_plane(*p0, *alpha0, grid.ndim());
            Ok(ComplexField {
                grid: grid.clone(),
                values: (0..grid.len())
                    .map(|i| amp * (a * grid.radius_sq_of(i)).exp())
                    .collect(),
            })
        }
        ProbeSpec::CustomCompact { p_check, .. } => {
            if !p_check.grid.approx_eq(grid, 1e-9) {
                return Err(Error::GridMismatch(
                    "compact probe array must live on the object grid".into(),
                ));
            }
            let reference = reference_term(probe, &grid.dual())?;
            let back = inverse_fourier_transform(&reference);
            let chirp = fresnel_chirp(grid)?;
            Ok(back.zip_map(&chirp, |b, w| b * w.conj()))
        }
    }
}

/// Empty-beam detector intensity `|D(P)|^2` on a physical grid.
pub fn empty_beam_intensity(
    probe: &ProbeSpec,
    geom: &ImagingGeometry,
    grid: &Grid,
) -> Result<RealImage> {
    probe.validate()?;
    geom.validate()?;
    match probe {
        ProbeSpec::PlaneWave { p0 } => Ok(RealImage {
            grid: grid.clone(),
            values: vec![p0.norm_sqr(); grid.len()],
            mask: None,
        }),
        ProbeSpec::Gaussian { p0, alpha0 } => {
            let scale = geom.k / geom.d;
            Ok(RealImage {
                grid: grid.clone(),
                values: (0..grid.len())
                    .map(|i| p0.norm_sqr() * (2.0 * alpha0.re * scale * grid.radius_sq_of(i)).exp())
                    .collect(),
                mask: None,
            })
        }
        ProbeSpec::CustomCompact { .. } => Err(Error::Probe(
            "compact probe arrays have no closed-form physical beam; \
             use the measurement operators instead"
                .into(),
        )),
    }
}

/// Far-field diffraction pattern `|F(psi0)|^2` on the dual grid.
pub fn far_field_intensity(psi0: &ComplexField) -> RealImage {
    fourier_transform(psi0).intensity()
}
