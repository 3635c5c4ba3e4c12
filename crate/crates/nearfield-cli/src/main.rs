//! Batch command-line front end for the nearfield toolkit.
//!
//! Exit codes are a stable scripting contract: 0 success, 2 validation,
//! 3 aliasing, 4 solver failure, 5 phase wrap, 1 I/O or format trouble.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nearfield::Error;

use config::{GeometryArgs, ProbeArgs, SolverArgs};

#[derive(Parser)]
#[command(
    name = "nearfield",
    about = "Near-field phase contrast imaging: simulation, retrieval, tomography, uniqueness probes",
    version
)]
struct Cli {
    /// JSON run configuration; explicit flags override file values.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    /// Seed for every random choice a command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true, default_value_t = false)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a disc phantom: projected phase / absorption plus transmission.
    Phantom {
        /// Disc phantom (the only built-in shape).
        #[arg(long, default_value_t = true)]
        disc: bool,
        #[arg(long)]
        n: Option<usize>,
        /// Disc radius as a fraction of the grid extent.
        #[arg(long)]
        radius_frac: Option<f64>,
        /// Projected phase inside the disc [radians].
        #[arg(long, allow_negative_numbers = true)]
        phi: Option<f64>,
        /// Projected absorption inside the disc.
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
        /// One-pixel cosine edge instead of a hard edge.
        #[arg(long, default_value_t = false)]
        smooth_edge: bool,
        /// One lateral dimension instead of two.
        #[arg(long, default_value_t = false)]
        one_dim: bool,
        /// Basename of the output files.
        #[arg(long)]
        name: Option<String>,
    },
    /// Propagate an object file to the detector and record the intensity.
    Simulate {
        /// Transmission HFLD written by `phantom`.
        #[arg(long)]
        object: std::path::PathBuf,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        probe: ProbeArgs,
        /// Detector distance via the dimensionless value 2 pi d / (k R^2)
        /// (requires the disc radius recorded in the object sidecar).
        #[arg(long)]
        fresnel_caption: Option<f64>,
        /// Far-field pattern |F(P O)|^2 instead of near-field propagation.
        #[arg(long, default_value_t = false)]
        far_field: bool,
        /// Additive Gaussian noise level on the intensity.
        #[arg(long)]
        noise_sigma: Option<f64>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Recover the perturbation and object from an intensity file.
    Reconstruct {
        #[arg(long)]
        intensity: std::path::PathBuf,
        /// Restrict data to an index window `x0:x1` (1-D) or `x0:x1,y0:y1`.
        #[arg(long)]
        mask: Option<String>,
        /// Gauss-Newton on the nonlinear map instead of the linearized one.
        #[arg(long, default_value_t = false)]
        nonlinear: bool,
        /// Support radius as a fraction of the grid half-extent.
        #[arg(long)]
        support_frac: Option<f64>,
        #[command(flatten)]
        probe: ProbeArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        name: Option<String>,
    },
    /// Tomography: simulate per-angle intensities or reconstruct from them.
    Tomo {
        #[command(subcommand)]
        action: TomoAction,
    },
    /// Assemble the linearized operator and report its singular spectrum
    /// under a family of detector windows.
    ProbeUniqueness {
        #[command(flatten)]
        probe: ProbeArgs,
        /// Window fractions in percent.
        #[arg(long, value_delimiter = ',')]
        masks: Option<Vec<f64>>,
        /// Support box length in samples.
        #[arg(long)]
        box_len: Option<usize>,
        /// Exploratory rank sweep over Im(alpha) for compact-array probes.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha_im_sweep: Option<Vec<f64>>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Divide an intensity by the empty-beam intensity.
    Flatfield {
        #[arg(long)]
        intensity: std::path::PathBuf,
        #[command(flatten)]
        probe: ProbeArgs,
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Subcommand)]
enum TomoAction {
    /// Simulate per-angle holographic intensities of a built-in phantom.
    Sim {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        angles: Option<usize>,
        /// Peak refractive line integral k R(delta) through the center.
        #[arg(long, allow_negative_numbers = true)]
        peak_delta: Option<f64>,
        /// Peak absorptive line integral k R(beta) through the center.
        #[arg(long, allow_negative_numbers = true)]
        peak_beta: Option<f64>,
        /// Blob radius as a fraction of the half-extent.
        #[arg(long)]
        blob_frac: Option<f64>,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        probe: ProbeArgs,
        /// Skip the phase-wrap validator.
        #[arg(long, default_value_t = false)]
        allow_wrap: bool,
        #[arg(long)]
        name: Option<String>,
    },
    /// Reconstruct delta and beta from per-angle intensities.
    Recon {
        /// Angle-major intensity file written by `tomo sim`.
        #[arg(long)]
        data: std::path::PathBuf,
        #[arg(long, default_value_t = false)]
        nonlinear: bool,
        /// Tolerate recovered phases at the wrap boundary.
        #[arg(long, default_value_t = false)]
        allow_wrap: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        name: Option<String>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Aliasing { .. } => 3,
        Error::Solver(_) => 4,
        Error::PhaseWrap { .. } => 5,
        Error::Io(_) | Error::Json(_) | Error::Format(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match config::Context::build(&cli) {
        Ok(ctx) => ctx,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(exit_code_for(&err));
        }
    };
    let result = match &cli.command {
        Command::Phantom {
            n,
            radius_frac,
            phi,
            mu,
            smooth_edge,
            one_dim,
            name,
            ..
        } => commands::phantom(
            &ctx,
            *n,
            *radius_frac,
            *phi,
            *mu,
            *smooth_edge,
            *one_dim,
            name.as_deref(),
        ),
        Command::Simulate {
            object,
            geometry,
            probe,
            fresnel_caption,
            far_field,
            noise_sigma,
            name,
        } => commands::simulate(
            &ctx,
            object,
            geometry,
            probe,
            *fresnel_caption,
            *far_field,
            *noise_sigma,
            name.as_deref(),
        ),
        Command::Reconstruct {
            intensity,
            mask,
            nonlinear,
            support_frac,
            probe,
            solver,
            name,
        } => commands::reconstruct(
            &ctx,
            intensity,
            mask.as_deref(),
            *nonlinear,
            *support_frac,
            probe,
            solver,
            name.as_deref(),
        ),
        Command::Tomo { action } => match action {
            TomoAction::Sim {
                n,
                angles,
                peak_delta,
                peak_beta,
                blob_frac,
                geometry,
                probe,
                allow_wrap,
                name,
            } => commands::tomo_sim(
                &ctx,
                *n,
                *angles,
                *peak_delta,
                *peak_beta,
                *blob_frac,
                geometry,
                probe,
                *allow_wrap,
                name.as_deref(),
            ),
            TomoAction::Recon {
                data,
                nonlinear,
                allow_wrap,
                solver,
                name,
            } => commands::tomo_recon(&ctx, data, *nonlinear, *allow_wrap, solver, name.as_deref()),
        },
        Command::ProbeUniqueness {
            probe,
            masks,
            box_len,
            alpha_im_sweep,
            solver,
        } => commands::probe_uniqueness(
            &ctx,
            probe,
            masks.as_deref(),
            *box_len,
            alpha_im_sweep.as_deref(),
            solver,
        ),
        Command::Flatfield {
            intensity,
            probe,
            name,
        } => commands::flatfield(&ctx, intensity, probe, name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
