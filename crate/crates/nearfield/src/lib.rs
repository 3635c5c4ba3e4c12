//! Near-field (holographic) phase contrast imaging toolkit.
//!
//! Simulates propagation-based X-ray phase contrast: an object imprints phase
//! shifts and absorption on a coherent probe beam, free-space Fresnel
//! propagation turns them into measurable intensity fringes at the detector,
//! and solvers invert the measurement back to the object. The crate covers
//! the forward models (projection approximation, Fresnel propagators, the
//! holographic intensity map and its weak-object linearization), parallel-beam
//! tomography on top of them, regularized reconstruction, and singular-value
//! probes of how much a restricted detector window still determines.
//!
//! Organization:
//! - [`grid`], [`field`], [`fft`]: centered grids, sampled fields, and the
//!   unitary continuum-normalized Fourier transform everything builds on.
//! - [`optics`]: Fresnel propagation in two equivalent forms, probe beams,
//!   reference terms.
//! - [`forward`]: object models, phantoms, holographic intensities, the
//!   nonlinear and linearized measurement operators.
//! - [`tomo`]: Radon transform, per-angle transmission, filtered
//!   backprojection, phase-wrap checks.
//! - [`inverse`]: conjugate-gradient Tikhonov and Gauss-Newton solvers,
//!   object recovery, tomographic reconstruction.
//! - [`analysis`]: dense operator assembly and singular-spectrum probes of
//!   injectivity under restricted data.
//! - [`io`]: HFLD field files, JSON sidecars, 16-bit PGM export.

pub mod analysis;
pub mod error;
pub mod fft;
pub mod field;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod io;
pub mod optics;
pub mod tomo;

pub use error::{Error, Result};
pub use field::{ComplexField, RealImage};
pub use grid::Grid;
