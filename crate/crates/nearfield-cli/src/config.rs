//! Run configuration: JSON file plus flag overrides (flags win).

use std::fs;
use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use serde::Deserialize;

use nearfield::inverse::SolverConfig;
use nearfield::optics::{ImagingGeometry, ProbeSpec};
use nearfield::{Error, Result};

/// Geometry flags shared by the simulating commands.
#[derive(Args, Debug, Clone, Default)]
pub struct GeometryArgs {
    /// Wavenumber [1/length].
    #[arg(long)]
    pub k: Option<f64>,
    /// Detector distance [length].
    #[arg(long)]
    pub d: Option<f64>,
    /// Lateral sample spacing [length].
    #[arg(long)]
    pub pixel: Option<f64>,
}

/// Probe flags shared by most commands.
#[derive(Args, Debug, Clone, Default)]
pub struct ProbeArgs {
    /// Probe kind: plane or gaussian.
    #[arg(long)]
    pub probe: Option<String>,
    /// Complex probe amplitude as `re,im`.
    #[arg(long, value_delimiter = ',', num_args = 1..=2, allow_hyphen_values = true)]
    pub p0: Option<Vec<f64>>,
    /// Detector-plane Gaussian exponent as `re,im` (re < 0, im <= 0).
    #[arg(long, value_delimiter = ',', num_args = 1..=2, allow_hyphen_values = true)]
    pub alpha0: Option<Vec<f64>>,
}

/// Solver flags shared by the reconstructing commands.
#[derive(Args, Debug, Clone, Default)]
pub struct SolverArgs {
    #[arg(long)]
    pub reg_alpha: Option<f64>,
    #[arg(long)]
    pub cg_max_iter: Option<usize>,
    #[arg(long)]
    pub cg_tol: Option<f64>,
    #[arg(long)]
    pub gn_max_iter: Option<usize>,
    #[arg(long)]
    pub gn_step_tol: Option<f64>,
}

/// The file half of the configuration; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub k: Option<f64>,
    pub d: Option<f64>,
    pub pixel: Option<f64>,
    pub probe: Option<String>,
    pub p0: Option<[f64; 2]>,
    pub alpha0: Option<[f64; 2]>,
    pub reg_alpha: Option<f64>,
    pub cg_max_iter: Option<usize>,
    pub cg_tol: Option<f64>,
    pub gn_max_iter: Option<usize>,
    pub gn_step_tol: Option<f64>,
}

/// Resolved global context: seed, output directory, file config, verbosity.
pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub quiet: bool,
    pub file: FileConfig,
}

impl Context {
    pub fn build(cli: &crate::Cli) -> Result<Context> {
        let file = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                serde_json::from_str(&text)?
            }
            None => FileConfig::default(),
        };
        let out = cli
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out)?;
        Ok(Context {
            seed: cli.seed.or(file.seed).unwrap_or(0),
            out,
            quiet: cli.quiet,
            file,
        })
    }

    pub fn say(&self, message: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", message.as_ref());
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Geometry from flags over file values; `d` may stay unset when the
    /// command derives it (caption value, critical sampling).
    pub fn geometry(&self, args: &GeometryArgs, m: usize, d: Option<f64>) -> Result<ImagingGeometry> {
        let k = args.k.or(self.file.k).unwrap_or(1.0);
        let pixel = args.pixel.or(self.file.pixel).unwrap_or(1.0);
        let d = d
            .or(args.d)
            .or(self.file.d)
            .ok_or_else(|| Error::Validation("no detector distance given".into()))?;
        ImagingGeometry::new(k, d, pixel, m)
    }

    pub fn probe(&self, args: &ProbeArgs) -> Result<ProbeSpec> {
        let kind = args
            .probe
            .clone()
            .or_else(|| self.file.probe.clone())
            .unwrap_or_else(|| "plane".into());
        let pair = |v: &[f64], what: &str| -> Result<Complex64> {
            if v.len() != 2 {
                return Err(Error::Validation(format!("{what} needs two values re,im")));
            }
            Ok(Complex64::new(v[0], v[1]))
        };
        let p0 = match &args.p0 {
            Some(v) => pair(v, "--p0")?,
            None => self
                .file
                .p0
                .map(|v| Complex64::new(v[0], v[1]))
                .unwrap_or(Complex64::ONE),
        };
        match kind.as_str() {
            "plane" => ProbeSpec::plane_wave(p0),
            "gaussian" => {
                let alpha0 = match &args.alpha0 {
                    Some(v) => pair(v, "--alpha0")?,
                    None => self
                        .file
                        .alpha0
                        .map(|v| Complex64::new(v[0], v[1]))
                        .ok_or_else(|| {
                            Error::Validation("gaussian probe needs --alpha0 re,im".into())
                        })?,
                };
                ProbeSpec::gaussian(p0, alpha0)
            }
            other => Err(Error::Validation(format!(
                "unknown probe kind {other:?} (plane or gaussian)"
            ))),
        }
    }

    pub fn solver(&self, args: &SolverArgs) -> Result<SolverConfig> {
        let defaults = SolverConfig::default();
        let cfg = SolverConfig {
            reg_alpha: args
                .reg_alpha
                .or(self.file.reg_alpha)
                .unwrap_or(defaults.reg_alpha),
            cg_max_iter: args
                .cg_max_iter
                .or(self.file.cg_max_iter)
                .unwrap_or(defaults.cg_max_iter),
            cg_tol: args.cg_tol.or(self.file.cg_tol).unwrap_or(defaults.cg_tol),
            gn_max_iter: args
                .gn_max_iter
                .or(self.file.gn_max_iter)
                .unwrap_or(defaults.gn_max_iter),
            gn_step_tol: args
                .gn_step_tol
                .or(self.file.gn_step_tol)
                .unwrap_or(defaults.gn_step_tol),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
