//! File formats: HFLD v1 fields, JSON sidecars, 16-bit PGM export.
//!
//! HFLD v1 layout (all integers little-endian u32, payload little-endian
//! f64): magic bytes `HFLD`, version = 1, ndim, dims\[ndim\], dtype
//! (1 = real, 2 = complex with interleaved re/im), then the samples
//! row-major. Grid spacing, geometry, probe parameters, masks and export
//! scalings travel in a JSON sidecar stored next to the field file with the
//! extension replaced by `.json`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealImage};
use crate::grid::Grid;
use crate::optics::{ImagingGeometry, ProbeSpec};

const MAGIC: &[u8; 4] = b"HFLD";
const VERSION: u32 = 1;
const DTYPE_REAL: u32 = 1;
const DTYPE_COMPLEX: u32 = 2;

/// Probe parameters in sidecar form (physical probes only).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ProbeSidecar {
    PlaneWave { p0: [f64; 2] },
    Gaussian { p0: [f64; 2], alpha0: [f64; 2] },
}

impl ProbeSidecar {
    pub fn from_probe(probe: &ProbeSpec) -> Option<ProbeSidecar> {
        match probe {
            ProbeSpec::PlaneWave { p0 } => Some(ProbeSidecar::PlaneWave { p0: [p0.re, p0.im] }),
            ProbeSpec::Gaussian { p0, alpha0 } => Some(ProbeSidecar::Gaussian {
                p0: [p0.re, p0.im],
                alpha0: [alpha0.re, alpha0.im],
            }),
            ProbeSpec::CustomCompact { .. } => None,
        }
    }

    pub fn to_probe(&self) -> Result<ProbeSpec> {
        match self {
            ProbeSidecar::PlaneWave { p0 } => ProbeSpec::plane_wave(Complex64::new(p0[0], p0[1])),
            ProbeSidecar::Gaussian { p0, alpha0 } => ProbeSpec::gaussian(
                Complex64::new(p0[0], p0[1]),
                Complex64::new(alpha0[0], alpha0[1]),
            ),
        }
    }
}

/// Linear (optionally log10) scaling applied when exporting PGM images.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PgmScale {
    pub min: f64,
    pub max: f64,
    pub log10: bool,
    /// Decades below the maximum clipped away in log mode.
    pub floor_decades: Option<f64>,
}

/// Everything a field file needs besides its raw samples.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct Sidecar {
    pub spacing: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<ImagingGeometry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSidecar>,
    /// Run-length encoded mask: (start, length) pairs of samples inside U.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask_rle: Option<Vec<[usize; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    /// Phantom disc radius, when the file stores one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pgm_scale: Option<PgmScale>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Sidecar {
    pub fn for_grid(grid: &Grid) -> Sidecar {
        Sidecar {
            spacing: grid.spacings().to_vec(),
            ..Sidecar::default()
        }
    }
}

/// Sidecar path: the field path with its extension replaced by `json`.
pub fn sidecar_path(field_path: &Path) -> PathBuf {
    field_path.with_extension("json")
}

pub fn mask_to_rle(mask: &[bool]) -> Vec<[usize; 2]> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            let start = i;
            while i < mask.len() && mask[i] {
                i += 1;
            }
            runs.push([start, i - start]);
        } else {
            i += 1;
        }
    }
    runs
}

pub fn rle_to_mask(runs: &[[usize; 2]], len: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; len];
    for &[start, run] in runs {
        let end = start
            .checked_add(run)
            .filter(|&e| e <= len)
            .ok_or_else(|| Error::Format(format!("mask run {start}+{run} exceeds length {len}")))?;
        for m in &mut mask[start..end] {
            *m = true;
        }
    }
    Ok(mask)
}

fn write_header(buf: &mut Vec<u8>, shape: &[usize], dtype: u32) {
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for &n in shape {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    buf.extend_from_slice(&dtype.to_le_bytes());
}

fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let json = serde_json::to_string_pretty(sidecar)?;
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn read_sidecar(field_path: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(sidecar_path(field_path))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_real_image(path: &Path, image: &RealImage, mut sidecar: Sidecar) -> Result<()> {
    sidecar.spacing = image.grid.spacings().to_vec();
    if let Some(mask) = &image.mask {
        sidecar.mask_rle = Some(mask_to_rle(mask));
    }
    let mut buf = Vec::with_capacity(24 + 8 * image.values.len());
    write_header(&mut buf, image.grid.shape(), DTYPE_REAL);
    for v in &image.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    write_sidecar(path, &sidecar)
}

pub fn write_complex_field(path: &Path, field: &ComplexField, mut sidecar: Sidecar) -> Result<()> {
    sidecar.spacing = field.grid.spacings().to_vec();
    let mut buf = Vec::with_capacity(24 + 16 * field.values.len());
    write_header(&mut buf, field.grid.shape(), DTYPE_COMPLEX);
    for v in &field.values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(path, buf)?;
    write_sidecar(path, &sidecar)
}

/// A field file plus its sidecar.
#[derive(Debug, Clone)]
pub enum FieldData {
    Real(RealImage),
    Complex(ComplexField),
}

pub fn read_field(path: &Path) -> Result<(FieldData, Sidecar)> {
    let mut file = fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let mut at = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        if at + n > bytes.len() {
            return Err(Error::Format("truncated HFLD file".into()));
        }
        let s = &bytes[at..at + n];
        at += n;
        Ok(s)
    };
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());

    if take(4)? != MAGIC {
        return Err(Error::Format("missing HFLD magic".into()));
    }
    let version = u32_at(take(4)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported HFLD version {version}")));
    }
    let ndim = u32_at(take(4)?) as usize;
    if ndim == 0 || ndim > 2 {
        return Err(Error::Format(format!("unsupported ndim {ndim}")));
    }
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        shape.push(u32_at(take(4)?) as usize);
    }
    let dtype = u32_at(take(4)?);
    let count: usize = shape.iter().product();

    let sidecar = read_sidecar(path)?;
    if sidecar.spacing.len() != ndim {
        return Err(Error::Format(format!(
            "sidecar lists {} spacings for {} axes",
            sidecar.spacing.len(),
            ndim
        )));
    }
    let grid = Grid::new(&shape, &sidecar.spacing)?;

    let data = match dtype {
        DTYPE_REAL => {
            let payload = take(8 * count)?;
            let values = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let mut image = RealImage::new(grid, values)?;
            if let Some(runs) = &sidecar.mask_rle {
                image = image.with_mask(rle_to_mask(runs, count)?)?;
            }
            FieldData::Real(image)
        }
        DTYPE_COMPLEX => {
            let payload = take(16 * count)?;
            let values = payload
                .chunks_exact(16)
                .map(|c| {
                    Complex64::new(
                        f64::from_le_bytes(c[..8].try_into().unwrap()),
                        f64::from_le_bytes(c[8..].try_into().unwrap()),
                    )
                })
                .collect();
            FieldData::Complex(ComplexField::new(grid, values)?)
        }
        other => return Err(Error::Format(format!("unknown dtype {other}"))),
    };
    if at != bytes.len() {
        return Err(Error::Format("trailing bytes after HFLD payload".into()));
    }
    Ok((data, sidecar))
}

pub fn read_real_image(path: &Path) -> Result<(RealImage, Sidecar)> {
    match read_field(path)? {
        (FieldData::Real(img), sc) => Ok((img, sc)),
        _ => Err(Error::Format(format!(
            "{} holds a complex field, expected real",
            path.display()
        ))),
    }
}

pub fn read_complex_field(path: &Path) -> Result<(ComplexField, Sidecar)> {
    match read_field(path)? {
        (FieldData::Complex(f), sc) => Ok((f, sc)),
        _ => Err(Error::Format(format!(
            "{} holds a real field, expected complex",
            path.display()
        ))),
    }
}

/// Write per-angle detector rows as an angle-major 2-D HFLD real field with
/// the angle list in the sidecar. Works for any angle count (the generic
/// field reader only accepts even dims, so sinograms have their own reader).
pub fn write_sinogram(
    path: &Path,
    angles: &[f64],
    detector: &Grid,
    rows: &[f64],
    mut sidecar: Sidecar,
) -> Result<()> {
    if detector.ndim() != 1 || rows.len() != angles.len() * detector.len() {
        return Err(Error::Validation("sinogram shape mismatch".into()));
    }
    sidecar.spacing = vec![1.0, detector.spacing(0)];
    sidecar.angles = Some(angles.to_vec());
    let mut buf = Vec::with_capacity(24 + 8 * rows.len());
    write_header(&mut buf, &[angles.len(), detector.len()], DTYPE_REAL);
    for v in rows {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    write_sidecar(path, &sidecar)
}

/// Counterpart of [`write_sinogram`]: angle list, detector grid, and the
/// angle-major payload.
pub fn read_sinogram(path: &Path) -> Result<(Vec<f64>, Grid, Vec<f64>, Sidecar)> {
    let bytes = fs::read(path)?;
    if bytes.len() < 24 || &bytes[0..4] != MAGIC {
        return Err(Error::Format("missing HFLD magic".into()));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    if u32_at(4) != VERSION as usize {
        return Err(Error::Format("unsupported HFLD version".into()));
    }
    if u32_at(8) != 2 {
        return Err(Error::Format("sinogram files are 2-D".into()));
    }
    let n_angles = u32_at(12);
    let n_det = u32_at(16);
    if u32_at(20) != DTYPE_REAL as usize {
        return Err(Error::Format("sinogram files hold real samples".into()));
    }
    let payload = &bytes[24..];
    if payload.len() != 8 * n_angles * n_det {
        return Err(Error::Format("sinogram payload size mismatch".into()));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let sidecar = read_sidecar(path)?;
    let angles = sidecar
        .angles
        .clone()
        .ok_or_else(|| Error::Format("sinogram sidecar lists no angles".into()))?;
    if angles.len() != n_angles {
        return Err(Error::Format("angle list length mismatch".into()));
    }
    if sidecar.spacing.len() != 2 {
        return Err(Error::Format("sinogram sidecar needs two spacings".into()));
    }
    let detector = Grid::new_1d(n_det, sidecar.spacing[1])?;
    Ok((angles, detector, values, sidecar))
}

/// Write a 16-bit binary PGM (P5, maxval 65535, big-endian samples) with
/// linear min-max scaling, optionally after a floored log10. Returns the
/// scaling so it can be recorded in a sidecar.
pub fn write_pgm16(path: &Path, image: &RealImage, log10: bool) -> Result<PgmScale> {
    let (rows, cols) = match image.grid.ndim() {
        1 => (1usize, image.grid.n(0)),
        _ => (image.grid.n(0), image.grid.n(1)),
    };
    let floor_decades = 8.0;
    let display: Vec<f64> = if log10 {
        let max = image.max().max(f64::MIN_POSITIVE);
        let floor = max * 10f64.powf(-floor_decades);
        image.values.iter().map(|&v| v.max(floor).log10()).collect()
    } else {
        image.values.clone()
    };
    let min = display.iter().copied().fold(f64::INFINITY, f64::min);
    let max = display.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;

    let mut out = Vec::with_capacity(32 + 2 * display.len());
    out.extend_from_slice(format!("P5\n{cols} {rows}\n65535\n").as_bytes());
    for &v in &display {
        let t = if span > 0.0 { (v - min) / span } else { 0.0 };
        let q = (t * 65535.0).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(PgmScale {
        min,
        max,
        log10,
        floor_decades: log10.then_some(floor_decades),
    })
}

/// Minimal PGM16 reader for round-trip checks.
pub fn read_pgm16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = fs::read(path)?;
    let mut newlines = 0usize;
    let mut header_end = None;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            newlines += 1;
            if newlines == 3 {
                header_end = Some(i + 1);
                break;
            }
        }
    }
    let header_end = header_end.ok_or_else(|| Error::Format("short PGM header".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::Format("non-UTF8 PGM header".into()))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("P5") {
        return Err(Error::Format("not a P5 PGM".into()));
    }
    let cols: usize = fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad PGM width".into()))?;
    let rows: usize = fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad PGM height".into()))?;
    if fields.next() != Some("65535") {
        return Err(Error::Format("expected 16-bit PGM".into()));
    }
    let payload = &bytes[header_end..];
    if payload.len() != rows * cols * 2 {
        return Err(Error::Format("PGM payload size mismatch".into()));
    }
    let values = payload
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, cols, values))
}
