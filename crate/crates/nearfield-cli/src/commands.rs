//! Command implementations.

use std::path::Path;

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use nearfield::analysis::{
    alpha_sweep, assemble_linearized_matrix, contiguous_mask, injectivity_probe,
    restricted_data_experiment, ExperimentConfig,
};
use nearfield::fft::fourier_transform;
use nearfield::field::{ComplexField, RealImage};
use nearfield::forward::{
    flat_field_normalize, holographic_intensity, phantom_disc, transmission_from_projection,
    Perturbation, SupportBox, TransmissionFunction,
};
use nearfield::grid::TAU;
use nearfield::inverse::{
    reconstruct_linear, reconstruct_nonlinear, recover_object, tomo_reconstruct,
    tomo_reconstruct_allow_wrap,
};
use nearfield::io::{
    read_complex_field, read_real_image, read_sinogram, write_complex_field, write_pgm16,
    write_real_image, write_sinogram, ProbeSidecar, Sidecar,
};
use nearfield::optics::{probe_object_field, ImagingGeometry, ProbeSpec, WeightSpec};
use nearfield::tomo::{smooth_blob_volume, tomo_forward};
use nearfield::{Error, Grid, Result};

use crate::config::{Context, GeometryArgs, ProbeArgs, SolverArgs};

#[allow(clippy::too_many_arguments)]
pub fn phantom(
    ctx: &Context,
    n: Option<usize>,
    radius_frac: Option<f64>,
    phi: Option<f64>,
    mu: Option<f64>,
    smooth_edge: bool,
    one_dim: bool,
    name: Option<&str>,
) -> Result<()> {
    let n = n.unwrap_or(1024);
    let radius_frac = radius_frac.unwrap_or(0.125);
    let phi = phi.unwrap_or(1.0);
    let mu = mu.unwrap_or(0.1);
    let name = name.unwrap_or("phantom");
    let grid = if one_dim {
        Grid::new_1d(n, 1.0)?
    } else {
        Grid::new_square(n, 1.0)?
    };
    let radius = radius_frac * n as f64 * grid.spacing(0);
    let proj = phantom_disc(&grid, radius, phi, mu, smooth_edge)?;
    let o = transmission_from_projection(&proj);

    let mut sidecar = Sidecar::for_grid(&grid);
    sidecar.radius = Some(radius);
    let phi_img = RealImage::new(grid.clone(), proj.phi.clone())?;
    let mu_img = RealImage::new(grid.clone(), proj.mu.clone())?;
    write_real_image(&ctx.path(&format!("{name}_phi.hfld")), &phi_img, sidecar.clone())?;
    write_real_image(&ctx.path(&format!("{name}_mu.hfld")), &mu_img, sidecar.clone())?;
    write_complex_field(&ctx.path(&format!("{name}_object.hfld")), &o.field, sidecar)?;
    ctx.say(format!(
        "wrote {name}_phi.hfld, {name}_mu.hfld, {name}_object.hfld (n = {n}, radius = {radius})"
    ));
    Ok(())
}

/// Rebuild a transmission function from a stored field: the support box is
/// the bounding box of samples that differ from 1.
fn transmission_from_field(field: ComplexField) -> Result<TransmissionFunction> {
    let grid = field.grid.clone();
    let mut lo = grid.shape().to_vec();
    let mut hi = vec![0usize; grid.ndim()];
    let mut any = false;
    for flat in 0..grid.len() {
        if (field.values[flat] - Complex64::ONE).norm() > 1e-12 {
            any = true;
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
    if !any {
        lo = grid.shape().iter().map(|&n| n / 2).collect();
        hi = lo.clone();
    }
    TransmissionFunction::new(field, SupportBox { lo, hi })
}

fn uniform_spacing(grid: &Grid) -> Result<f64> {
    let s = grid.spacing(0);
    for axis in 1..grid.ndim() {
        if (grid.spacing(axis) - s).abs() > 1e-12 * s {
            return Err(Error::Validation("grid spacing must be uniform".into()));
        }
    }
    Ok(s)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    ctx: &Context,
    object: &Path,
    geometry: &GeometryArgs,
    probe_args: &ProbeArgs,
    fresnel_caption: Option<f64>,
    far_field: bool,
    noise_sigma: Option<f64>,
    name: Option<&str>,
) -> Result<()> {
    let name = name.unwrap_or("intensity");
    let (field, object_sidecar) = read_complex_field(object)?;
    let grid = field.grid.clone();
    let pixel = uniform_spacing(&grid)?;
    if let Some(p) = geometry.pixel {
        if (p - pixel).abs() > 1e-12 * pixel {
            return Err(Error::Validation(format!(
                "--pixel {p} conflicts with the object file spacing {pixel}"
            )));
        }
    }
    let o = transmission_from_field(field)?;
    let probe = ctx.probe(probe_args)?;
    let k = geometry.k.or(ctx.file.k).unwrap_or(1.0);
    let d = match fresnel_caption {
        Some(caption) => {
            let radius = object_sidecar.radius.ok_or_else(|| {
                Error::Validation(
                    "--fresnel-caption needs the disc radius recorded in the object sidecar".into(),
                )
            })?;
            Some(caption * k * radius * radius / TAU)
        }
        None => None,
    };
    let geom = ctx.geometry(
        &GeometryArgs {
            k: Some(k),
            pixel: Some(pixel),
            d: geometry.d,
        },
        grid.ndim(),
        d,
    )?;

    if far_field {
        let xi_grid = geom.dimensionless_grid(&grid)?;
        let p = probe_object_field(&probe, &xi_grid)?;
        let exit = ComplexField::new(
            grid.clone(),
            o.field
                .values
                .iter()
                .zip(&p.values)
                .map(|(&ov, &pv)| pv * ov)
                .collect(),
        )?;
        let pattern = fourier_transform(&exit).intensity();
        let mut sidecar = Sidecar::for_grid(&pattern.grid);
        sidecar.geometry = Some(geom.clone());
        sidecar.probe = ProbeSidecar::from_probe(&probe);
        let scale = write_pgm16(&ctx.path(&format!("{name}_far.pgm")), &pattern, true)?;
        sidecar.pgm_scale = Some(scale);
        write_real_image(&ctx.path(&format!("{name}_far.hfld")), &pattern, sidecar)?;
        ctx.say(format!("wrote {name}_far.hfld and log-scaled {name}_far.pgm"));
        return Ok(());
    }

    let mut image = holographic_intensity(&o, &probe, &geom)?;
    if let Some(sigma) = noise_sigma {
        if sigma < 0.0 {
            return Err(Error::Validation("noise sigma must be >= 0".into()));
        }
        let normal = Normal::new(0.0, sigma)
            .map_err(|e| Error::Validation(format!("noise sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        for v in &mut image.values {
            *v += normal.sample(&mut rng);
        }
    }
    let mut sidecar = Sidecar::for_grid(&image.grid);
    sidecar.geometry = Some(geom.clone());
    sidecar.probe = ProbeSidecar::from_probe(&probe);
    sidecar.radius = object_sidecar.radius;
    sidecar.seed = noise_sigma.map(|_| ctx.seed);
    let scale = write_pgm16(&ctx.path(&format!("{name}.pgm")), &image, false)?;
    sidecar.pgm_scale = Some(scale);
    write_real_image(&ctx.path(&format!("{name}.hfld")), &image, sidecar)?;
    ctx.say(format!(
        "wrote {name}.hfld and {name}.pgm (k = {}, d = {}, pixel = {})",
        geom.k, geom.d, geom.pixel
    ));
    Ok(())
}

fn parse_mask(spec: &str, grid: &Grid) -> Result<Vec<bool>> {
    let parse_range = |part: &str, n: usize| -> Result<(usize, usize)> {
        let (a, b) = part.split_once(':').ok_or_else(|| {
            Error::Validation(format!("mask range {part:?} must look like start:end"))
        })?;
        let a: usize = a
            .parse()
            .map_err(|_| Error::Validation(format!("bad mask index {a:?}")))?;
        let b: usize = b
            .parse()
            .map_err(|_| Error::Validation(format!("bad mask index {b:?}")))?;
        if a >= b || b > n {
            return Err(Error::Validation(format!(
                "mask range {a}:{b} outside 0..{n}"
            )));
        }
        Ok((a, b))
    };
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != grid.ndim() {
        return Err(Error::Validation(format!(
            "mask has {} ranges for a {}-axis grid",
            parts.len(),
            grid.ndim()
        )));
    }
    let mut mask = vec![false; grid.len()];
    match grid.ndim() {
        1 => {
            let (a, b) = parse_range(parts[0], grid.n(0))?;
            for m in &mut mask[a..b] {
                *m = true;
            }
        }
        _ => {
            let (a0, b0) = parse_range(parts[0], grid.n(0))?;
            let (a1, b1) = parse_range(parts[1], grid.n(1))?;
            for r in a0..b0 {
                for c in a1..b1 {
                    mask[r * grid.n(1) + c] = true;
                }
            }
        }
    }
    Ok(mask)
}

fn critical_xi_grid(grid: &Grid, geom: &ImagingGeometry) -> Result<Grid> {
    let dxi = geom.dimensionless_spacing();
    let critical = (TAU / grid.n(0) as f64).sqrt();
    if (dxi - critical).abs() > 1e-6 * critical {
        return Err(Error::Validation(format!(
            "retrieval needs critical sampling: dimensionless spacing {dxi:.6e} vs \
             (2 pi / n)^(1/2) = {critical:.6e}; set d = n k pixel^2 / (2 pi)"
        )));
    }
    geom.dimensionless_grid(grid)
}

#[allow(clippy::too_many_arguments)]
pub fn reconstruct(
    ctx: &Context,
    intensity: &Path,
    mask: Option<&str>,
    nonlinear: bool,
    support_frac: Option<f64>,
    probe_args: &ProbeArgs,
    solver: &SolverArgs,
    name: Option<&str>,
) -> Result<()> {
    let name = name.unwrap_or("recovered");
    let (image, sidecar) = read_real_image(intensity)?;
    let geom = sidecar.geometry.clone().ok_or_else(|| {
        Error::Validation("intensity sidecar carries no geometry; run simulate first".into())
    })?;
    let probe = match (&probe_args.probe, &sidecar.probe) {
        (None, Some(ps)) => ps.to_probe()?,
        _ => ctx.probe(probe_args)?,
    };
    let cfg = ctx.solver(solver)?;
    let xi_grid = critical_xi_grid(&image.grid, &geom)?;
    let support_frac = support_frac.unwrap_or(0.25);
    let support = SupportBox::from_radius(&xi_grid, support_frac * xi_grid.half_extent(0));

    let mask = mask.map(|spec| parse_mask(spec, &image.grid)).transpose()?;
    let data = RealImage {
        grid: xi_grid.dual(),
        values: image.values.clone(),
        mask,
    };
    let (h, report) = if nonlinear {
        let init = Perturbation::zeros(xi_grid.clone(), support.clone())?;
        reconstruct_nonlinear(&data, &probe, &WeightSpec::FresnelChirp, &xi_grid, &support, &init, &cfg)?
    } else {
        reconstruct_linear(&data, &probe, &WeightSpec::FresnelChirp, &xi_grid, &support, &cfg)?
    };
    let o = recover_object(&h, &probe)?;

    let mut out_sidecar = Sidecar::for_grid(&xi_grid);
    out_sidecar.geometry = Some(geom);
    out_sidecar.probe = ProbeSidecar::from_probe(&probe);
    write_complex_field(&ctx.path(&format!("{name}_h.hfld")), &h.field, out_sidecar.clone())?;
    write_complex_field(&ctx.path(&format!("{name}_object.hfld")), &o.field, out_sidecar)?;
    std::fs::write(
        ctx.path(&format!("{name}_report.json")),
        serde_json::to_string_pretty(&report).map_err(Error::Json)?,
    )?;
    ctx.say(format!(
        "wrote {name}_h.hfld, {name}_object.hfld, {name}_report.json \
         ({} iterations, residual {:.3e})",
        report.iterations, report.final_residual
    ));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn tomo_sim(
    ctx: &Context,
    n: Option<usize>,
    angles: Option<usize>,
    peak_delta: Option<f64>,
    peak_beta: Option<f64>,
    blob_frac: Option<f64>,
    geometry: &GeometryArgs,
    probe_args: &ProbeArgs,
    allow_wrap: bool,
    name: Option<&str>,
) -> Result<()> {
    let n = n.unwrap_or(64);
    let n_angles = angles.unwrap_or(180);
    if n_angles == 0 {
        return Err(Error::Validation("angle count must be >= 1".into()));
    }
    let peak_delta = peak_delta.unwrap_or(0.5);
    let peak_beta = peak_beta.unwrap_or(0.05);
    let blob_frac = blob_frac.unwrap_or(0.25);
    let name = name.unwrap_or("tomo");

    let k = geometry.k.or(ctx.file.k).unwrap_or(1.0);
    let pixel = geometry.pixel.or(ctx.file.pixel).unwrap_or(1.0);
    // critically sampled by default so the data feeds retrieval directly
    let d = geometry
        .d
        .or(ctx.file.d)
        .unwrap_or_else(|| ImagingGeometry::critical_distance(k, pixel, n));
    let geom = ImagingGeometry::new(k, d, pixel, 1)?;
    let probe = ctx.probe(probe_args)?;

    let grid = Grid::new_square(n, pixel)?;
    let volume = smooth_blob_volume(&grid, blob_frac * grid.half_extent(0), peak_delta, peak_beta, k)?;
    let angle_list: Vec<f64> = (0..n_angles)
        .map(|i| i as f64 * std::f64::consts::PI / n_angles as f64)
        .collect();
    let images = tomo_forward(&volume, &probe, &geom, &angle_list, allow_wrap)?;

    let detector = volume.detector_grid();
    let rows: Vec<f64> = images.iter().flat_map(|img| img.values.clone()).collect();
    let sidecar = Sidecar {
        geometry: Some(geom.clone()),
        probe: ProbeSidecar::from_probe(&probe),
        support_radius: Some(volume.support_radius),
        ..Sidecar::default()
    };
    write_sinogram(
        &ctx.path(&format!("{name}_intensities.hfld")),
        &angle_list,
        &detector,
        &rows,
        sidecar,
    )?;

    // ground truth for comparisons
    let truth = RealImage::new(grid.clone(), volume.delta.clone())?;
    write_real_image(
        &ctx.path(&format!("{name}_true_delta.hfld")),
        &truth,
        Sidecar::for_grid(&grid),
    )?;
    let truth = RealImage::new(grid.clone(), volume.beta.clone())?;
    write_real_image(
        &ctx.path(&format!("{name}_true_beta.hfld")),
        &truth,
        Sidecar::for_grid(&grid),
    )?;
    ctx.say(format!(
        "wrote {name}_intensities.hfld ({n_angles} angles x {n} samples) and ground truth"
    ));
    Ok(())
}

pub fn tomo_recon(
    ctx: &Context,
    data: &Path,
    nonlinear: bool,
    allow_wrap: bool,
    solver: &SolverArgs,
    name: Option<&str>,
) -> Result<()> {
    let name = name.unwrap_or("tomo_recon");
    let (angles, detector, rows, sidecar) = read_sinogram(data)?;
    let geom = sidecar.geometry.clone().ok_or_else(|| {
        Error::Validation("tomography sidecar carries no geometry".into())
    })?;
    let probe = sidecar
        .probe
        .as_ref()
        .ok_or_else(|| Error::Validation("tomography sidecar carries no probe".into()))?
        .to_probe()?;
    let support_radius = sidecar.support_radius.ok_or_else(|| {
        Error::Validation("tomography sidecar carries no support radius".into())
    })?;
    let cfg = ctx.solver(solver)?;

    let n = detector.len();
    let images: Vec<RealImage> = (0..angles.len())
        .map(|a| RealImage::new(detector.clone(), rows[a * n..(a + 1) * n].to_vec()))
        .collect::<Result<_>>()?;
    let (volume, reports) = if allow_wrap {
        tomo_reconstruct_allow_wrap(&images, &probe, &geom, &angles, support_radius, &cfg, nonlinear)?
    } else {
        tomo_reconstruct(&images, &probe, &geom, &angles, support_radius, &cfg, nonlinear)?
    };

    let delta = RealImage::new(volume.grid.clone(), volume.delta.clone())?;
    let beta = RealImage::new(volume.grid.clone(), volume.beta.clone())?;
    write_real_image(
        &ctx.path(&format!("{name}_delta.hfld")),
        &delta,
        Sidecar::for_grid(&volume.grid),
    )?;
    write_real_image(
        &ctx.path(&format!("{name}_beta.hfld")),
        &beta,
        Sidecar::for_grid(&volume.grid),
    )?;
    std::fs::write(
        ctx.path(&format!("{name}_report.json")),
        serde_json::to_string_pretty(&reports).map_err(Error::Json)?,
    )?;
    ctx.say(format!(
        "wrote {name}_delta.hfld, {name}_beta.hfld, {name}_report.json ({} angles)",
        angles.len()
    ));
    Ok(())
}

pub fn probe_uniqueness(
    ctx: &Context,
    probe_args: &ProbeArgs,
    masks: Option<&[f64]>,
    box_len: Option<usize>,
    alpha_im_sweep: Option<&[f64]>,
    solver: &SolverArgs,
) -> Result<()> {
    let probe = ctx.probe(probe_args)?;
    // focused beams light fewer detector samples, so their full-rank box
    // is smaller by default
    let default_box = match &probe {
        ProbeSpec::Gaussian { alpha0, .. } if alpha0.re < -0.2 => 8,
        _ => 32,
    };
    let cfg = ExperimentConfig::standard(probe)?.with_box_len(box_len.unwrap_or(default_box))?;
    let fractions: Vec<f64> = masks
        .map(|m| m.iter().map(|&pct| pct / 100.0).collect())
        .unwrap_or_else(|| vec![1.0, 0.5, 0.25, 0.1]);
    let mut solver_cfg = ctx.solver(solver)?;
    if solver.reg_alpha.is_none() && ctx.file.reg_alpha.is_none() {
        solver_cfg.reg_alpha = 1e-8;
    }

    let reports = restricted_data_experiment(&cfg, &fractions, &solver_cfg)?;
    for report in &reports {
        ctx.say(format!(
            "window {:5.1}%: rank {}/{} (sigma_min/sigma_max {:.2e}), \
             calibration-object error {:.3e}",
            100.0 * report.fraction,
            report.injectivity.numerical_rank,
            report.injectivity.n_unknowns,
            report.injectivity.sigma_min / report.injectivity.sigma_max,
            report.recon_rel_error
        ));
        let csv_name = format!("spectrum_{:03.0}.csv", 100.0 * report.fraction);
        let mut csv = String::from("index,sigma\n");
        for (i, s) in report.injectivity.singular_values.iter().enumerate() {
            csv.push_str(&format!("{i},{s:e}\n"));
        }
        std::fs::write(ctx.path(&csv_name), csv)?;
    }
    std::fs::write(
        ctx.path("uniqueness_report.json"),
        serde_json::to_string_pretty(&reports).map_err(Error::Json)?,
    )?;
    ctx.say("wrote uniqueness_report.json and spectrum_*.csv");

    if let Some(imags) = alpha_im_sweep {
        let sweep = alpha_sweep(&cfg.grid, &cfg.support, &cfg.weight, imags)?;
        for (im, report) in &sweep {
            ctx.say(format!(
                "Im(alpha) {im:+.3e}: rank {}/{}",
                report.numerical_rank, report.n_unknowns
            ));
        }
        std::fs::write(
            ctx.path("alpha_sweep.json"),
            serde_json::to_string_pretty(&sweep).map_err(Error::Json)?,
        )?;
        ctx.say("wrote alpha_sweep.json");
    }

    // full-data double check straight from the matrix path
    let a = assemble_linearized_matrix(&cfg.probe, &cfg.weight, &cfg.grid, &cfg.support, Some(&contiguous_mask(cfg.grid.dual().len(), 1.0)))?;
    let full = injectivity_probe(&a, "full data")?;
    if full.numerical_rank < full.n_unknowns {
        ctx.say(format!(
            "note: full-data operator is rank deficient ({}/{})",
            full.numerical_rank, full.n_unknowns
        ));
    }
    Ok(())
}

pub fn flatfield(
    ctx: &Context,
    intensity: &Path,
    probe_args: &ProbeArgs,
    name: Option<&str>,
) -> Result<()> {
    let name = name.unwrap_or("flatfield");
    let (image, sidecar) = read_real_image(intensity)?;
    let geom = sidecar.geometry.clone().ok_or_else(|| {
        Error::Validation("intensity sidecar carries no geometry".into())
    })?;
    let probe = match (&probe_args.probe, &sidecar.probe) {
        (None, Some(ps)) => ps.to_probe()?,
        _ => ctx.probe(probe_args)?,
    };
    let normalized = flat_field_normalize(&image, &probe, &geom)?;
    let mut out_sidecar = Sidecar::for_grid(&normalized.grid);
    out_sidecar.geometry = Some(geom);
    out_sidecar.probe = ProbeSidecar::from_probe(&probe);
    write_real_image(&ctx.path(&format!("{name}.hfld")), &normalized, out_sidecar)?;
    ctx.say(format!("wrote {name}.hfld"));
    Ok(())
}
