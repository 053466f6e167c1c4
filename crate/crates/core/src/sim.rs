//! Synthetic Fourier-imaging experiments: phantoms, sampling patterns, noise,
//! and grids of tests over sampling ratio and noise variance.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::credible_region::compute_epsilon_bound;
use crate::engine::{run_buqo_from_map, BuqoSettings, Decision, StopReason};
use crate::error::{invalid, Result};
use crate::image::{Image, PixelMask};
use crate::map_solver::{solve_map, MapProblem};
use crate::operators::{ComplexOperator, Db8Wavelet, LinearOperator, MaskedDft, MultiCoil, RealOperator, SamplingPattern};
use crate::structure_sets::StructureSpec;

/// SplitMix64 finalizer; derives independent stream seeds from a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn signed(k: usize, n: usize) -> i64 {
    let (k, n) = (k as i64, n as i64);
    if k >= (n + 1) / 2 {
        k - n
    } else {
        k
    }
}

fn unsigned(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPattern {
    pub pattern: SamplingPattern,
    /// Rejection sampling stalled and the remainder was filled with the
    /// lowest unused frequencies.
    pub fallback: bool,
}

/// `round(ratio * N)` distinct frequencies drawn from a rounded zero-mean
/// Gaussian with per-axis standard deviation `0.25 * (n / 2)`.
///
/// Draws are consumed in a fixed order, so for one seed the pattern at a
/// lower ratio is contained in the pattern at a higher ratio.
pub fn gaussian_random_pattern(rows: usize, cols: usize, ratio: f64, seed: u64) -> Result<GeneratedPattern> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(invalid("ratio", format!("{ratio} not in ]0, 1]")));
    }
    let n = rows * cols;
    if n == 0 {
        return Err(invalid("rows/cols", "grid must be non-empty"));
    }
    let m = ((ratio * n as f64).round() as usize).clamp(1, n);
    if m == n {
        return Ok(GeneratedPattern {
            pattern: SamplingPattern::full(rows, cols),
            fallback: false,
        });
    }
    let std_u = 0.25 * rows as f64 / 2.0;
    let std_v = 0.25 * cols as f64 / 2.0;
    let du = Normal::new(0.0, std_u.max(1e-12)).expect("positive std");
    let dv = Normal::new(0.0, std_v.max(1e-12)).expect("positive std");
    let (half_u, half_v) = ((rows as i64 + 1) / 2, (cols as i64 + 1) / 2);
    let (lo_u, lo_v) = (-(rows as i64) / 2, -(cols as i64) / 2);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = vec![false; n];
    let mut chosen = Vec::with_capacity(m);
    let max_attempts = 100 * n;
    let mut attempts = 0;
    while chosen.len() < m && attempts < max_attempts {
        attempts += 1;
        let ku = du.sample(&mut rng).round() as i64;
        let kv = dv.sample(&mut rng).round() as i64;
        if ku < lo_u || ku >= half_u || kv < lo_v || kv >= half_v {
            continue;
        }
        let idx = unsigned(ku, rows) * cols + unsigned(kv, cols);
        if !taken[idx] {
            taken[idx] = true;
            chosen.push(idx);
        }
    }
    let fallback = chosen.len() < m;
    if fallback {
        let missing = m - chosen.len();
        let mut rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
        rest.sort_by_key(|&i| {
            let (u, v) = (signed(i / cols, rows), signed(i % cols, cols));
            (u * u + v * v, i)
        });
        chosen.extend(rest.into_iter().take(m - chosen.len()));
        log::warn!("gaussian pattern: rejection sampling stalled, filled {missing} lowest frequencies");
    }
    Ok(GeneratedPattern {
        pattern: SamplingPattern::new(rows, cols, chosen)?,
        fallback,
    })
}

/// Full phase-encoding lines (rows of the frequency grid).
///
/// With `freq_factor >= 1` every `round(freq_factor)`-th sample of a line is
/// kept and `round(rows / phase_factor)` lines are acquired. A
/// `freq_factor < 1` denotes oversampling along the line, which is spent on
/// extra lines: `round(rows / (phase_factor * freq_factor))`.
pub fn cartesian_pattern(rows: usize, cols: usize, freq_factor: f64, phase_factor: f64) -> Result<SamplingPattern> {
    if !(freq_factor > 0.0) || !(phase_factor > 0.0) {
        return Err(invalid("factors", "undersampling factors must be positive"));
    }
    let stride = (freq_factor.round() as usize).max(1);
    let line_factor = if freq_factor < 1.0 { phase_factor * freq_factor } else { phase_factor };
    let n_lines = ((rows as f64 / line_factor).round() as usize).clamp(1, rows);
    let mut indices = Vec::with_capacity(n_lines * cols.div_ceil(stride));
    for j in 0..n_lines {
        let k = (j * rows / n_lines) as i64 - rows as i64 / 2;
        let u = unsigned(k, rows);
        for v in (0..cols).step_by(stride) {
            indices.push(u * cols + v);
        }
    }
    SamplingPattern::new(rows, cols, indices)
}

/// Adds i.i.d. `N(0, sigma2)` noise to real and imaginary parts.
pub fn add_noise(clean: &[Complex64], sigma2: f64, seed: u64) -> Result<Vec<Complex64>> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(invalid("sigma2", format!("{sigma2} must be nonnegative")));
    }
    let noise = unit_noise(clean.len(), seed);
    let s = sigma2.sqrt();
    Ok(clean.iter().zip(noise).map(|(&y, w)| y + w * s).collect())
}

/// Standard complex Gaussian vector (unit variance per part).
pub fn unit_noise(m: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, 1.0).expect("unit normal");
    (0..m)
        .map(|_| Complex64::new(d.sample(&mut rng), d.sample(&mut rng)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    CompactSources,
    BrainLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub row: usize,
    pub col: usize,
    /// Pixel value at `(row, col)` in the final image.
    pub amplitude: f64,
    /// Support radius in pixels.
    pub radius: f64,
    pub bright: bool,
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub image: Image,
    pub sources: Vec<Source>,
}

impl Phantom {
    /// The brightest declared source.
    pub fn brightest(&self) -> Option<&Source> {
        self.sources.iter().max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
    }

    /// Disk covering a source with one pixel of margin.
    pub fn source_mask(&self, source: &Source) -> PixelMask {
        PixelMask::disk(self.image.rows(), self.image.cols(), (source.row, source.col), source.radius + 1.0)
    }

    /// Largest disk of the given radius whose centre is farthest from every
    /// pixel above `level * max`.
    pub fn empty_region_mask(&self, radius: f64, level: f64) -> PixelMask {
        let img = &self.image;
        let (rows, cols) = (img.rows(), img.cols());
        let bright = PixelMask::from_predicate(rows, cols, |r, c| img.get(r, c) > level * img.max());
        let margin = radius.ceil() as usize + 1;
        let mut best = ((rows / 2, cols / 2), -1.0);
        for r in margin..rows.saturating_sub(margin) {
            for c in margin..cols.saturating_sub(margin) {
                let d = bright
                    .indices()
                    .iter()
                    .map(|&i| {
                        let (br, bc) = ((i / cols) as f64, (i % cols) as f64);
                        (br - r as f64).powi(2) + (bc - c as f64).powi(2)
                    })
                    .fold(f64::INFINITY, f64::min);
                if d > best.1 {
                    best = ((r, c), d);
                }
            }
        }
        PixelMask::disk(rows, cols, best.0, radius)
    }
}

/// Radial profile equal to 1 up to `0.6 * radius`, then a raised-cosine taper
/// reaching 0 at `radius`.
fn plateau(d2: f64, radius: f64) -> f64 {
    let d = d2.sqrt();
    let core = 0.6 * radius;
    if d <= core {
        1.0
    } else if d < radius {
        0.5 * (1.0 + (std::f64::consts::PI * (d - core) / (radius - core)).cos())
    } else {
        0.0
    }
}

fn bump(d2: f64, radius: f64) -> f64 {
    // Gaussian truncated to its support, exactly 1 at the centre.
    if d2 > radius * radius {
        0.0
    } else {
        (-d2 / (2.0 * (radius / 2.0).powi(2))).exp()
    }
}

/// Nonnegative test image with maximum 1.
///
/// `CompactSources`: two bright flat-topped sources, three faint ones and a smooth
/// extended component in one quadrant; sources have disjoint supports and
/// none overlaps the extended emission. `BrainLike`: nested smooth ellipses
/// with a few small lesions.
pub fn make_phantom(kind: PhantomKind, rows: usize, cols: usize, seed: u64) -> Result<Phantom> {
    if rows < 32 || cols < 32 {
        return Err(invalid("rows/cols", "phantoms need at least 32 x 32 pixels"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        PhantomKind::CompactSources => Ok(compact_sources(rows, cols, &mut rng)),
        PhantomKind::BrainLike => Ok(brain_like(rows, cols, &mut rng)),
    }
}

fn compact_sources(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Phantom {
    let scale = rows.min(cols) as f64 / 64.0;
    let mut data = vec![0.0; rows * cols];
    // Extended emission centred in the lower-right quadrant.
    let (er, ec) = (0.72 * rows as f64, 0.7 * cols as f64);
    let ext_radius = 0.16 * rows.min(cols) as f64;
    for r in 0..rows {
        for c in 0..cols {
            let d2 = (r as f64 - er).powi(2) + (c as f64 - ec).powi(2);
            data[r * cols + c] += 0.25 * bump(d2, ext_radius);
        }
    }
    let specs = [
        (1.0, 5.0 * scale, true),
        (0.8, 4.0 * scale, true),
        (0.15, 2.0 * scale, false),
        (0.12, 2.0 * scale, false),
        (0.1, 2.0 * scale, false),
    ];
    let mut sources: Vec<Source> = Vec::new();
    for (amp, radius, bright) in specs {
        let margin = radius + 2.0;
        let (r, c) = loop {
            let r = rng.random_range(margin..rows as f64 - margin).round() as usize;
            let c = rng.random_range(margin..cols as f64 - margin).round() as usize;
            let clear_of_sources = sources.iter().all(|s| {
                let d = ((s.row as f64 - r as f64).powi(2) + (s.col as f64 - c as f64).powi(2)).sqrt();
                d > s.radius + radius + 4.0
            });
            let de = ((r as f64 - er).powi(2) + (c as f64 - ec).powi(2)).sqrt();
            if clear_of_sources && de > ext_radius + radius + 2.0 {
                break (r, c);
            }
        };
        for rr in 0..rows {
            for cc in 0..cols {
                let d2 = (rr as f64 - r as f64).powi(2) + (cc as f64 - c as f64).powi(2);
                data[rr * cols + cc] += amp * plateau(d2, radius);
            }
        }
        sources.push(Source {
            row: r,
            col: c,
            amplitude: amp,
            radius,
            bright,
        });
    }
    finish(rows, cols, data, sources)
}

fn brain_like(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Phantom {
    let (cr, cc) = (rows as f64 / 2.0, cols as f64 / 2.0);
    let smooth_step = |t: f64| 1.0 / (1.0 + (-t).exp());
    let mut data = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let u = (r as f64 - cr) / (0.42 * rows as f64);
            let v = (c as f64 - cc) / (0.34 * cols as f64);
            let rho = (u * u + v * v).sqrt();
            let skull = smooth_step((1.0 - rho) * 40.0) - smooth_step((0.9 - rho) * 40.0);
            let tissue = smooth_step((0.88 - rho) * 30.0);
            let ventricles = smooth_step((0.18 - ((u + 0.05).powi(2) * 4.0 + v * v * 9.0).sqrt()) * 40.0);
            data[r * cols + c] = 0.9 * skull + 0.45 * tissue - 0.3 * ventricles.min(tissue);
        }
    }
    let mut sources = Vec::new();
    for _ in 0..3 {
        let radius = 1.5 * rows.min(cols) as f64 / 64.0;
        let r = rng.random_range(0.35 * rows as f64..0.65 * rows as f64).round() as usize;
        let c = rng.random_range(0.3 * cols as f64..0.7 * cols as f64).round() as usize;
        for rr in 0..rows {
            for cc in 0..cols {
                let d2 = (rr as f64 - r as f64).powi(2) + (cc as f64 - c as f64).powi(2);
                data[rr * cols + cc] += 0.4 * bump(d2, radius);
            }
        }
        sources.push(Source {
            row: r,
            col: c,
            amplitude: 0.0,
            radius,
            bright: false,
        });
    }
    finish(rows, cols, data, sources)
}

fn finish(rows: usize, cols: usize, mut data: Vec<f64>, mut sources: Vec<Source>) -> Phantom {
    data.iter_mut().for_each(|v| *v = v.max(0.0));
    let max = data.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        data.iter_mut().for_each(|v| *v /= max);
    }
    for s in &mut sources {
        s.amplitude = data[s.row * cols + s.col];
    }
    Phantom {
        image: Image::new(rows, cols, data).expect("phantom shape"),
        sources,
    }
}

/// Smooth coil profiles peaking at the four image edges, normalized so their
/// squares sum to one at every pixel.
pub fn coil_sensitivities(rows: usize, cols: usize, n_coils: usize) -> Vec<Vec<f64>> {
    let width = 0.6 * rows.max(cols) as f64;
    let centres: Vec<(f64, f64)> = (0..n_coils)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n_coils as f64;
            (rows as f64 / 2.0 * (1.0 + t.cos()), cols as f64 / 2.0 * (1.0 + t.sin()))
        })
        .collect();
    let mut profiles: Vec<Vec<f64>> = centres
        .iter()
        .map(|&(r0, c0)| {
            (0..rows * cols)
                .map(|i| {
                    let (r, c) = ((i / cols) as f64, (i % cols) as f64);
                    (-((r - r0).powi(2) + (c - c0).powi(2)) / (2.0 * width * width)).exp()
                })
                .collect()
        })
        .collect();
    for i in 0..rows * cols {
        let s: f64 = profiles.iter().map(|p| p[i] * p[i]).sum::<f64>().sqrt();
        for p in &mut profiles {
            p[i] /= s;
        }
    }
    profiles
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternKind {
    GaussianRandom,
    /// Ignores the sampling ratio; the achieved ratio is reported instead.
    CartesianLines { freq_factor: f64, phase_factor: f64 },
    /// Same Gaussian pattern on every coil; the ratio is per coil.
    MultiCoil { n_coils: usize },
}

/// Frequency pattern for one sampling ratio. Multi-coil problems reuse one
/// Gaussian pattern on every coil.
pub fn measurement_pattern(kind: &PatternKind, rows: usize, cols: usize, ratio: f64, seed: u64) -> Result<GeneratedPattern> {
    match *kind {
        PatternKind::GaussianRandom | PatternKind::MultiCoil { .. } => gaussian_random_pattern(rows, cols, ratio, seed),
        PatternKind::CartesianLines {
            freq_factor,
            phase_factor,
        } => Ok(GeneratedPattern {
            pattern: cartesian_pattern(rows, cols, freq_factor, phase_factor)?,
            fallback: false,
        }),
    }
}

/// Forward model over a given pattern.
pub fn operator_for_pattern(kind: &PatternKind, pattern: SamplingPattern) -> Result<ComplexOperator> {
    Ok(match *kind {
        PatternKind::GaussianRandom | PatternKind::CartesianLines { .. } => Arc::new(MaskedDft::new(pattern)?),
        PatternKind::MultiCoil { n_coils } => {
            if n_coils == 0 {
                return Err(invalid("n_coils", "must be positive"));
            }
            let (rows, cols) = (pattern.rows(), pattern.cols());
            Arc::new(MultiCoil::new(vec![pattern; n_coils], coil_sensitivities(rows, cols, n_coils))?)
        }
    })
}

/// Forward model for one sampling ratio.
pub fn build_measurement_operator(kind: &PatternKind, rows: usize, cols: usize, ratio: f64, seed: u64) -> Result<ComplexOperator> {
    operator_for_pattern(kind, measurement_pattern(kind, rows, cols, ratio, seed)?.pattern)
}

/// Wavelet depth used by the experiments: as deep as the grid allows, at most 4.
pub fn default_wavelet(rows: usize, cols: usize) -> Result<RealOperator> {
    let levels = Db8Wavelet::max_levels(rows, cols, 4).max(1);
    Ok(Arc::new(Db8Wavelet::new(rows, cols, levels)?))
}

/// Noisy measurements of `truth` through `phi` with `epsilon` from the
/// two-standard-deviation bound.
pub fn simulate_problem(truth: &Image, phi: ComplexOperator, sigma2: f64, noise_seed: u64) -> Result<MapProblem> {
    if !(sigma2 > 0.0) {
        return Err(invalid("sigma2", "noise variance must be positive"));
    }
    let clean = phi.forward(truth.as_slice());
    let y = add_noise(&clean, sigma2, noise_seed)?;
    let epsilon = compute_epsilon_bound(sigma2.sqrt(), y.len())?;
    let psi = default_wavelet(truth.rows(), truth.cols())?;
    MapProblem::new(phi, psi, y, epsilon, truth.rows(), truth.cols())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedStructure {
    pub name: String,
    pub spec: StructureSpec,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub phantom: Image,
    pub pattern_kind: PatternKind,
    pub sampling_ratios: Vec<f64>,
    pub noise_variances: Vec<f64>,
    pub structures: Vec<NamedStructure>,
    pub settings: BuqoSettings,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sampling_ratios.is_empty() || self.noise_variances.is_empty() || self.structures.is_empty() {
            return Err(invalid("grid", "ratios, variances and structures must be non-empty"));
        }
        if let Some(r) = self.sampling_ratios.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
            return Err(invalid("sampling_ratios", format!("{r} not in ]0, 1]")));
        }
        if let Some(v) = self.noise_variances.iter().find(|&&v| !(v > 0.0)) {
            return Err(invalid("noise_variances", format!("{v} must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub rho_alpha: f64,
    pub decision: Decision,
    pub distance: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub map_converged: bool,
    pub inner_converged: bool,
    pub x_map: Image,
    /// Counter-example pair: closest points of the region and the structure set.
    pub x_region: Image,
    pub x_set: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub structure: String,
    pub ratio: f64,
    pub sigma2: f64,
    pub outcome: std::result::Result<CellSummary, String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub cells: Vec<CellResult>,
    pub seed: u64,
}

const PATTERN_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Seeds used for the cell at `(ratio index, variance index)`.
///
/// One pattern seed serves all ratios so patterns are nested. The noise seed
/// depends on the ratio only: cells in a row share one standard noise draw
/// scaled by `sqrt(sigma2)`.
pub fn cell_seeds(master: u64, ratio_index: usize) -> (u64, u64) {
    (
        derive_seed(master, PATTERN_STREAM),
        derive_seed(derive_seed(master, NOISE_STREAM), ratio_index as u64),
    )
}

/// Runs every `(ratio, sigma2)` cell in parallel; the MAP estimate of a cell
/// is shared by all structures. Failures are recorded per cell.
pub fn run_grid(spec: &ExperimentSpec) -> Result<GridReport> {
    spec.validate()?;
    let (rows, cols) = (spec.phantom.rows(), spec.phantom.cols());
    let jobs: Vec<(usize, usize)> = (0..spec.sampling_ratios.len())
        .flat_map(|i| (0..spec.noise_variances.len()).map(move |j| (i, j)))
        .collect();
    let per_job: Vec<Vec<CellResult>> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let ratio = spec.sampling_ratios[i];
            let sigma2 = spec.noise_variances[j];
            let (pattern_seed, noise_seed) = cell_seeds(spec.seed, i);
            let start = Instant::now();
            let prepared = build_measurement_operator(&spec.pattern_kind, rows, cols, ratio, pattern_seed)
                .and_then(|phi| simulate_problem(&spec.phantom, phi, sigma2, noise_seed))
                .and_then(|problem| solve_map(&problem, &spec.settings.map).map(|map| (problem, map)));
            let map_seconds = start.elapsed().as_secs_f64();
            spec.structures
                .iter()
                .map(|s| {
                    let t = Instant::now();
                    let outcome = match &prepared {
                        Err(e) => Err(format!("map: {e}")),
                        Ok((problem, map)) => {
                            run_buqo_from_map(problem, &map.image, map.converged, &s.spec, &spec.settings)
                                .map(|o| CellSummary {
                                    rho_alpha: o.rho_alpha,
                                    decision: o.decision,
                                    distance: o.distance,
                                    iterations: o.iterations,
                                    stop_reason: o.stop_reason,
                                    map_converged: o.map_converged,
                                    inner_converged: o.inner_converged,
                                    x_map: o.x_map,
                                    x_region: o.x_region,
                                    x_set: o.x_set,
                                })
                                .map_err(|e| e.to_string())
                        }
                    };
                    CellResult {
                        structure: s.name.clone(),
                        ratio,
                        sigma2,
                        outcome,
                        seconds: map_seconds + t.elapsed().as_secs_f64(),
                    }
                })
                .collect()
        })
        .collect();
    let mut cells: Vec<CellResult> = per_job.into_iter().flatten().collect();
    let order = |name: &str| spec.structures.iter().position(|s| s.name == name).unwrap_or(usize::MAX);
    cells.sort_by(|a, b| {
        order(&a.structure)
            .cmp(&order(&b.structure))
            .then(a.ratio.total_cmp(&b.ratio))
            .then(a.sigma2.total_cmp(&b.sigma2))
    });
    Ok(GridReport { cells, seed: spec.seed })
}

impl GridReport {
    /// Tab-separated table of results; contains no timing so it is
    /// reproducible byte for byte.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("structure\tratio\tsigma2\trho_pct\tdecision\tdistance\titerations\tstop_reason\tstatus\n");
        for c in &self.cells {
            match &c.outcome {
                Ok(s) => out.push_str(&format!(
                    "{}\t{}\t{}\t{:.4}\t{}\t{:.6e}\t{}\t{}\tok\n",
                    c.structure,
                    c.ratio,
                    c.sigma2,
                    100.0 * s.rho_alpha,
                    s.decision.as_str(),
                    s.distance,
                    s.iterations,
                    s.stop_reason.as_str()
                )),
                Err(e) => out.push_str(&format!(
                    "{}\t{}\t{}\t\t\t\t\t\terror: {}\n",
                    c.structure,
                    c.ratio,
                    c.sigma2,
                    e.replace(['\t', '\n'], " ")
                )),
            }
        }
        out
    }

    pub fn timings_tsv(&self) -> String {
        let mut out = String::from("structure\tratio\tsigma2\tseconds\n");
        for c in &self.cells {
            out.push_str(&format!("{}\t{}\t{}\t{:.3}\n", c.structure, c.ratio, c.sigma2, c.seconds));
        }
        out
    }

    /// `rho` table (percent) for one structure, rows indexed by ratio and
    /// columns by variance; failed cells are `None`.
    pub fn rho_matrix(&self, structure: &str) -> Vec<Vec<Option<f64>>> {
        let mut ratios: Vec<f64> = Vec::new();
        let mut vars: Vec<f64> = Vec::new();
        for c in self.cells.iter().filter(|c| c.structure == structure) {
            if !ratios.contains(&c.ratio) {
                ratios.push(c.ratio);
            }
            if !vars.contains(&c.sigma2) {
                vars.push(c.sigma2);
            }
        }
        ratios.iter()
            .map(|&r| {
                vars.iter()
                    .map(|&v| {
                        self.cells
                            .iter()
                            .find(|c| c.structure == structure && c.ratio == r && c.sigma2 == v)
                            .and_then(|c| c.outcome.as_ref().ok())
                            .map(|s| 100.0 * s.rho_alpha)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Distinct frequencies of a pattern as signed `(ku, kv)` pairs.
pub fn signed_frequencies(pattern: &SamplingPattern) -> Vec<(i64, i64)> {
    pattern.indices().iter().map(|&i| pattern.signed_frequency(i)).collect()
}
