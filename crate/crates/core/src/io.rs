//! File formats.
//!
//! * image: `BUQO1 <rows> <cols>\n` then `rows * cols` little-endian `f64`, row-major
//! * mask: `BUQOMASK1 <rows> <cols> <n>\n` then `n` index lines
//! * sampling pattern: `BUQOFREQ1 <rows> <cols> <n>\n` then `n` index lines
//! * measurements: `BUQOCPLX1 <m>\n` then `m` pairs of little-endian `f64` (re, im)
//! * structure: `BUQOSTRUCT1 <kind>\n`, an optional mask block, then `key = value` lines
//! * outcome: `key = value` lines

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::engine::{Decision, StopReason, TestOutcome};
use crate::error::{BuqoError, Result};
use crate::image::{Image, PixelMask};
use crate::operators::SamplingPattern;
use crate::structure_sets::{
    BMode, LocalizedOptions, StructureSpec, DEFAULT_DILATION_RADIUS, DEFAULT_KERNEL_SIZES, DEFAULT_THRESHOLD_FRAC,
    DEFAULT_VARTHETA,
};

fn format_err(msg: impl Into<String>) -> BuqoError {
    BuqoError::Format(msg.into())
}

fn read_header<R: BufRead>(r: &mut R, magic: &str, fields: usize) -> Result<Vec<usize>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(magic) {
        return Err(format_err(format!("expected `{magic}` header, found `{}`", line.trim())));
    }
    let values: Vec<usize> = parts
        .map(|p| p.parse().map_err(|_| format_err(format!("bad header field `{p}`"))))
        .collect::<Result<_>>()?;
    if values.len() != fields {
        return Err(format_err(format!("`{magic}` header needs {fields} fields")));
    }
    Ok(values)
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| format_err(format!("truncated payload: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(format_err("trailing bytes after payload"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn write_image<W: Write>(w: &mut W, image: &Image) -> Result<()> {
    writeln!(w, "BUQO1 {} {}", image.rows(), image.cols())?;
    for v in image.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_image<R: Read>(r: R) -> Result<Image> {
    let mut r = BufReader::new(r);
    let h = read_header(&mut r, "BUQO1", 2)?;
    let data = read_f64s(&mut r, h[0] * h[1])?;
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(BuqoError::NonFinite(i));
    }
    Image::new(h[0], h[1], data)
}

fn write_indices<W: Write>(w: &mut W, magic: &str, rows: usize, cols: usize, indices: &[usize]) -> Result<()> {
    writeln!(w, "{magic} {rows} {cols} {}", indices.len())?;
    for i in indices {
        writeln!(w, "{i}")?;
    }
    Ok(())
}

fn read_indices<R: BufRead>(r: &mut R, magic: &str) -> Result<(usize, usize, Vec<usize>)> {
    let h = read_header(r, magic, 3)?;
    let mut indices = Vec::with_capacity(h[2]);
    let mut line = String::new();
    while indices.len() < h[2] {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(format_err(format!("`{magic}` block ended after {} of {} indices", indices.len(), h[2])));
        }
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        indices.push(t.parse().map_err(|_| format_err(format!("bad index `{t}`")))?);
    }
    Ok((h[0], h[1], indices))
}

pub fn write_mask<W: Write>(w: &mut W, mask: &PixelMask) -> Result<()> {
    write_indices(w, "BUQOMASK1", mask.rows(), mask.cols(), mask.indices())
}

pub fn read_mask<R: Read>(r: R) -> Result<PixelMask> {
    let (rows, cols, idx) = read_indices(&mut BufReader::new(r), "BUQOMASK1")?;
    PixelMask::new(rows, cols, idx)
}

pub fn write_pattern<W: Write>(w: &mut W, pattern: &SamplingPattern) -> Result<()> {
    write_indices(w, "BUQOFREQ1", pattern.rows(), pattern.cols(), pattern.indices())
}

pub fn read_pattern<R: Read>(r: R) -> Result<SamplingPattern> {
    let (rows, cols, idx) = read_indices(&mut BufReader::new(r), "BUQOFREQ1")?;
    SamplingPattern::new(rows, cols, idx)
}

pub fn write_measurements<W: Write>(w: &mut W, y: &[Complex64]) -> Result<()> {
    writeln!(w, "BUQOCPLX1 {}", y.len())?;
    for z in y {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_measurements<R: Read>(r: R) -> Result<Vec<Complex64>> {
    let mut r = BufReader::new(r);
    let h = read_header(&mut r, "BUQOCPLX1", 1)?;
    let flat = read_f64s(&mut r, 2 * h[0])?;
    let y: Vec<Complex64> = flat.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    if let Some(i) = y.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(BuqoError::NonFinite(i));
    }
    Ok(y)
}

pub fn write_structure<W: Write>(w: &mut W, spec: &StructureSpec) -> Result<()> {
    match spec {
        StructureSpec::Localized {
            mask,
            kernel_sizes,
            options,
        } => {
            writeln!(w, "BUQOSTRUCT1 localized")?;
            write_mask(w, mask)?;
            let ks: Vec<String> = kernel_sizes.iter().map(|k| k.to_string()).collect();
            writeln!(w, "kernel_sizes = {}", ks.join(","))?;
            if let Some(t) = options.tau {
                writeln!(w, "tau = {t:e}")?;
            }
            if let Some(t) = options.theta {
                writeln!(w, "theta = {t:e}")?;
            }
            let b = match options.b_mode {
                BMode::Zero => "zero",
                BMode::Inpainted => "inpainted",
            };
            writeln!(w, "b-mode = {b}")?;
        }
        StructureSpec::Background {
            mask,
            threshold_frac,
            dilation_radius,
            vartheta,
        } => {
            writeln!(w, "BUQOSTRUCT1 background")?;
            if let Some(m) = mask {
                write_mask(w, m)?;
            }
            writeln!(w, "threshold_frac = {threshold_frac:e}")?;
            writeln!(w, "dilation_radius = {dilation_radius}")?;
            writeln!(w, "vartheta = {vartheta:e}")?;
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| format_err(format!("bad value `{value}` for `{key}`")))
}

pub fn read_structure<R: Read>(r: R) -> Result<StructureSpec> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| format_err("empty structure file"))?;
    let kind = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["BUQOSTRUCT1", kind] => kind.to_string(),
        _ => return Err(format_err(format!("expected `BUQOSTRUCT1 <kind>`, found `{header}`"))),
    };
    let rest: Vec<&str> = lines.collect();
    let (mask, params) = match rest.first() {
        Some(first) if first.starts_with("BUQOMASK1") => {
            let n: usize = first
                .split_whitespace()
                .nth(3)
                .ok_or_else(|| format_err("mask header needs 3 fields"))
                .and_then(|v| parse_num("n", v))?;
            if rest.len() < n + 1 {
                return Err(format_err("mask block is truncated"));
            }
            let block = rest[..=n].join("\n");
            (Some(read_mask(block.as_bytes())?), &rest[n + 1..])
        }
        _ => (None, &rest[..]),
    };

    let mut kernel_sizes = DEFAULT_KERNEL_SIZES.to_vec();
    let mut options = LocalizedOptions::default();
    let mut threshold_frac = DEFAULT_THRESHOLD_FRAC;
    let mut dilation_radius = DEFAULT_DILATION_RADIUS;
    let mut vartheta = DEFAULT_VARTHETA;
    for line in params {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| format_err(format!("expected `key = value`, found `{line}`")))?;
        match key {
            "kernel_sizes" => {
                kernel_sizes = value
                    .split(',')
                    .map(|k| parse_num(key, k.trim()))
                    .collect::<Result<_>>()?;
            }
            "tau" => options.tau = Some(parse_num(key, value)?),
            "theta" => options.theta = Some(parse_num(key, value)?),
            "b-mode" => {
                options.b_mode = match value {
                    "zero" => BMode::Zero,
                    "inpainted" => BMode::Inpainted,
                    _ => return Err(format_err(format!("unknown b-mode `{value}`"))),
                }
            }
            "threshold_frac" => threshold_frac = parse_num(key, value)?,
            "dilation_radius" => dilation_radius = parse_num(key, value)?,
            "vartheta" => vartheta = parse_num(key, value)?,
            _ => return Err(format_err(format!("unknown structure key `{key}`"))),
        }
    }
    match kind.as_str() {
        "localized" => Ok(StructureSpec::Localized {
            mask: mask.ok_or_else(|| format_err("localized structure needs a mask"))?,
            kernel_sizes,
            options,
        }),
        "background" => Ok(StructureSpec::Background {
            mask,
            threshold_frac,
            dilation_radius,
            vartheta,
        }),
        other => Err(format_err(format!("unknown structure kind `{other}`"))),
    }
}

/// Scalar part of a [`TestOutcome`] as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub rho_alpha: f64,
    pub distance: f64,
    pub decision: Decision,
    pub alpha: f64,
    pub eta: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub lambda: f64,
    pub eta_tilde: f64,
    pub tau_alpha: f64,
    pub narrative: String,
}

impl From<&TestOutcome> for OutcomeRecord {
    fn from(o: &TestOutcome) -> Self {
        Self {
            rho_alpha: o.rho_alpha,
            distance: o.distance,
            decision: o.decision,
            alpha: o.alpha,
            eta: o.eta_threshold,
            iterations: o.iterations,
            stop_reason: o.stop_reason,
            lambda: o.lambda,
            eta_tilde: o.eta_tilde,
            tau_alpha: o.tau_alpha,
            narrative: o.narrative.clone(),
        }
    }
}

impl OutcomeRecord {
    /// Floats are written with `{:e}`, which round-trips exactly.
    pub fn to_text(&self) -> String {
        format!(
            "rho_alpha = {:e}\ndistance = {:e}\ndecision = {}\nalpha = {:e}\neta = {:e}\niterations = {}\nstop_reason = {}\nlambda = {:e}\neta_tilde = {:e}\ntau_alpha = {:e}\nnarrative = {}\n",
            self.rho_alpha,
            self.distance,
            self.decision.as_str(),
            self.alpha,
            self.eta,
            self.iterations,
            self.stop_reason.as_str(),
            self.lambda,
            self.eta_tilde,
            self.tau_alpha,
            self.narrative.replace('\n', " ")
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| format_err(format!("expected `key = value`, found `{line}`")))?;
            map.insert(k.trim().to_string(), v.to_string());
        }
        let get = |k: &str| map.get(k).ok_or_else(|| format_err(format!("missing key `{k}`")));
        let decision = match get("decision")?.as_str() {
            "rejected" => Decision::Rejected,
            "not_rejected" => Decision::NotRejected,
            other => return Err(format_err(format!("unknown decision `{other}`"))),
        };
        let stop_reason = match get("stop_reason")?.as_str() {
            "iterate_change" => StopReason::IterateChange,
            "distance_change" => StopReason::DistanceChange,
            "max_iters" => StopReason::MaxIters,
            other => return Err(format_err(format!("unknown stop reason `{other}`"))),
        };
        Ok(Self {
            rho_alpha: parse_num("rho_alpha", get("rho_alpha")?)?,
            distance: parse_num("distance", get("distance")?)?,
            decision,
            alpha: parse_num("alpha", get("alpha")?)?,
            eta: parse_num("eta", get("eta")?)?,
            iterations: parse_num("iterations", get("iterations")?)?,
            stop_reason,
            lambda: parse_num("lambda", get("lambda")?)?,
            eta_tilde: parse_num("eta_tilde", get("eta_tilde")?)?,
            tau_alpha: parse_num("tau_alpha", get("tau_alpha")?)?,
            narrative: get("narrative")?.clone(),
        })
    }
}

fn save(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn save_image(path: &Path, image: &Image) -> Result<()> {
    save(path, |w| write_image(w, image))
}

pub fn load_image(path: &Path) -> Result<Image> {
    read_image(fs::File::open(path)?)
}

pub fn save_mask(path: &Path, mask: &PixelMask) -> Result<()> {
    save(path, |w| write_mask(w, mask))
}

pub fn load_mask(path: &Path) -> Result<PixelMask> {
    read_mask(fs::File::open(path)?)
}

pub fn save_pattern(path: &Path, pattern: &SamplingPattern) -> Result<()> {
    save(path, |w| write_pattern(w, pattern))
}

pub fn load_pattern(path: &Path) -> Result<SamplingPattern> {
    read_pattern(fs::File::open(path)?)
}

pub fn save_measurements(path: &Path, y: &[Complex64]) -> Result<()> {
    save(path, |w| write_measurements(w, y))
}

pub fn load_measurements(path: &Path) -> Result<Vec<Complex64>> {
    read_measurements(fs::File::open(path)?)
}

pub fn save_structure(path: &Path, spec: &StructureSpec) -> Result<()> {
    save(path, |w| write_structure(w, spec))
}

pub fn load_structure(path: &Path) -> Result<StructureSpec> {
    read_structure(fs::File::open(path)?)
}
