//! Outer feasibility loop between the credible region and a structure set,
//! the normalized distance `rho`, the decision, and the full pipeline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::credible_region::{build_region, compute_tau_alpha, CredibleRegion, RegionProjector};
use crate::error::{check_dim, invalid, BuqoError, Result};
use crate::image::Image;
use crate::map_solver::{compute_lambda, solve_map, MapProblem, MapSettings};
use crate::primal_dual::PdSettings;
use crate::scalar;
use crate::structure_sets::{SetProjector, StructureSet, StructureSpec};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_ETA: f64 = 0.03;

/// Outcome of one projection call.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Something that projects onto a fixed closed convex set.
pub trait Projector {
    fn project(&mut self, x: &[f64]) -> Result<ProjectionResult>;
}

/// Wraps an exact projection given as a function.
pub struct ExactProjector<F>(pub F);

impl<F: FnMut(&[f64]) -> Vec<f64>> Projector for ExactProjector<F> {
    fn project(&mut self, x: &[f64]) -> Result<ProjectionResult> {
        Ok(ProjectionResult {
            point: (self.0)(x),
            converged: true,
            iterations: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Both iterate sequences settled.
    IterateChange,
    /// The gap sequence settled.
    DistanceChange,
    MaxIters,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::IterateChange => "iterate_change",
            StopReason::DistanceChange => "distance_change",
            StopReason::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for OuterSettings {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iters: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityRun {
    pub x_region: Vec<f64>,
    pub x_set: Vec<f64>,
    pub distance: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub delta_series: Vec<f64>,
    /// Every inner projection met its own tolerance.
    pub inner_converged: bool,
}

fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    let d = scalar::distance(new, old);
    if d == 0.0 {
        0.0
    } else {
        d / scalar::norm(old).max(f64::MIN_POSITIVE)
    }
}

struct Stopper {
    tol: f64,
    deltas: Vec<f64>,
}

impl Stopper {
    fn check(&mut self, k: usize, change_a: f64, change_b: f64, delta: f64) -> Option<StopReason> {
        self.deltas.push(delta);
        if k >= 1 && change_a < self.tol && change_b < self.tol {
            return Some(StopReason::IterateChange);
        }
        if k >= 1 {
            let prev = self.deltas[k - 1];
            if (delta - prev).abs() < self.tol * delta {
                return Some(StopReason::DistanceChange);
            }
        }
        None
    }
}

/// Alternating projections started from `x0`, which should lie in the set.
pub fn run_pocs(
    region: &mut dyn Projector,
    set: &mut dyn Projector,
    x0: &[f64],
    settings: &OuterSettings,
) -> Result<FeasibilityRun> {
    if !(settings.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let mut stopper = Stopper {
        tol: settings.tol,
        deltas: Vec::new(),
    };
    let mut x = x0.to_vec();
    let mut half_prev: Option<Vec<f64>> = None;
    let mut inner_ok = true;
    for k in 0..settings.max_iters {
        let half = region.project(&x)?;
        let next = set.project(&half.point)?;
        inner_ok &= half.converged && next.converged;
        let delta = scalar::distance(&half.point, &next.point);
        let change_half = half_prev.as_deref().map_or(f64::INFINITY, |p| rel_change(&half.point, p));
        let change_x = rel_change(&next.point, &x);
        let stop = stopper.check(k, change_half, change_x, delta);
        x = next.point;
        if let Some(reason) = stop {
            return Ok(FeasibilityRun {
                x_region: half.point,
                x_set: x,
                distance: delta,
                iterations: k + 1,
                stop_reason: reason,
                delta_series: stopper.deltas,
                inner_converged: inner_ok,
            });
        }
        half_prev = Some(half.point);
    }
    let x_region = half_prev.unwrap_or_else(|| x0.to_vec());
    Ok(FeasibilityRun {
        distance: scalar::distance(&x_region, &x),
        x_region,
        x_set: x,
        iterations: settings.max_iters,
        stop_reason: StopReason::MaxIters,
        delta_series: stopper.deltas,
        inner_converged: inner_ok,
    })
}

/// Forward-backward iteration on `1/2 ||x_c - x_s||^2` over both sets:
///
/// ```text
/// x_c+ = P_C((1 - g) x_c + g x_s)
/// x_s+ = P_S((1 - g) x_s + g x_c)
/// ```
pub fn run_fb_distance(
    region: &mut dyn Projector,
    set: &mut dyn Projector,
    x_region0: &[f64],
    x_set0: &[f64],
    gamma: f64,
    settings: &OuterSettings,
) -> Result<FeasibilityRun> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid("gamma", format!("{gamma} not in ]0, 1[")));
    }
    if !(settings.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    check_dim("initial pair", x_region0.len(), x_set0.len())?;
    let mut stopper = Stopper {
        tol: settings.tol,
        deltas: Vec::new(),
    };
    let mut xc = x_region0.to_vec();
    let mut xs = x_set0.to_vec();
    let mut inner_ok = true;
    for k in 0..settings.max_iters {
        let nc = region.project(&scalar::lerp(&xc, &xs, gamma))?;
        let ns = set.project(&scalar::lerp(&xs, &xc, gamma))?;
        inner_ok &= nc.converged && ns.converged;
        let delta = scalar::distance(&nc.point, &ns.point);
        let stop = stopper.check(k, rel_change(&nc.point, &xc), rel_change(&ns.point, &xs), delta);
        xc = nc.point;
        xs = ns.point;
        if let Some(reason) = stop {
            return Ok(FeasibilityRun {
                x_region: xc,
                x_set: xs,
                distance: delta,
                iterations: k + 1,
                stop_reason: reason,
                delta_series: stopper.deltas,
                inner_converged: inner_ok,
            });
        }
    }
    Ok(FeasibilityRun {
        distance: scalar::distance(&xc, &xs),
        x_region: xc,
        x_set: xs,
        iterations: settings.max_iters,
        stop_reason: StopReason::MaxIters,
        delta_series: stopper.deltas,
        inner_converged: inner_ok,
    })
}

/// `||x_set - x_region|| / ||x_map - surrogate||`
pub fn compute_rho(region_pt: &[f64], set_pt: &[f64], x_map: &[f64], surrogate: &[f64]) -> Result<f64> {
    check_dim("counter-example pair", region_pt.len(), set_pt.len())?;
    check_dim("surrogate", x_map.len(), surrogate.len())?;
    let denom = scalar::distance(x_map, surrogate);
    if denom <= 1e-12 * scalar::norm(x_map) || denom == 0.0 {
        return Err(BuqoError::NoStructureEnergy(denom));
    }
    Ok(scalar::distance(set_pt, region_pt) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Rejected,
    NotRejected,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Rejected => "rejected",
            Decision::NotRejected => "not_rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub decision: Decision,
    pub narrative: String,
}

/// `H0` (structure absent) is rejected iff `rho > eta`.
pub fn decide(rho: f64, eta: f64, alpha: f64) -> Verdict {
    let pct = |v: f64| 100.0 * v;
    if rho > eta {
        Verdict {
            decision: Decision::Rejected,
            narrative: format!(
                "H0 rejected at significance alpha = {:.2}%; confirmed intensity rho_alpha = {:.2}%",
                pct(alpha),
                pct(rho)
            ),
        }
    } else {
        Verdict {
            decision: Decision::NotRejected,
            narrative: format!(
                "we fail to reject H0 at significance alpha = {:.2}%: rho_alpha = {:.2}% does not exceed eta = {:.2}%; the data cannot confirm the structure",
                pct(alpha),
                pct(rho),
                pct(eta)
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pocs,
    Fb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuqoSettings {
    pub alpha: f64,
    pub eta: f64,
    pub mode: Mode,
    /// Step of the forward-backward mode.
    pub fb_gamma: f64,
    pub map: MapSettings,
    pub inner: PdSettings,
    pub outer: OuterSettings,
}

impl Default for BuqoSettings {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            eta: DEFAULT_ETA,
            mode: Mode::Pocs,
            fb_gamma: 0.5,
            map: MapSettings::default(),
            inner: PdSettings::default(),
            outer: OuterSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Map,
    Region,
    Set,
    Engine,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Map => "MAP",
            Stage::Region => "credible region",
            Stage::Set => "structure set",
            Stage::Engine => "feasibility engine",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: BuqoError,
}

fn at(stage: Stage) -> impl FnOnce(BuqoError) -> PipelineError {
    move |source| PipelineError { stage, source }
}

#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub rho_alpha: f64,
    pub distance: f64,
    pub decision: Decision,
    pub narrative: String,
    pub alpha: f64,
    pub eta_threshold: f64,
    pub x_region: Image,
    pub x_set: Image,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub delta_series: Vec<f64>,
    pub inner_converged: bool,
    pub x_map: Image,
    pub map_converged: bool,
    pub surrogate: Image,
    pub lambda: f64,
    pub tau_alpha: f64,
    pub eta_tilde: f64,
}

/// Solves the MAP problem, then runs [`run_buqo_from_map`].
pub fn run_buqo(
    problem: &MapProblem,
    spec: &StructureSpec,
    settings: &BuqoSettings,
) -> std::result::Result<TestOutcome, PipelineError> {
    compute_tau_alpha(settings.alpha, problem.n_pixels()).map_err(at(Stage::Region))?;
    let map = solve_map(problem, &settings.map).map_err(at(Stage::Map))?;
    run_buqo_from_map(problem, &map.image, map.converged, spec, settings)
}

/// Region, set, feasibility loop and decision for an already computed MAP estimate.
pub fn run_buqo_from_map(
    problem: &MapProblem,
    x_map: &Image,
    map_converged: bool,
    spec: &StructureSpec,
    settings: &BuqoSettings,
) -> std::result::Result<TestOutcome, PipelineError> {
    let region = prepare_region(problem, x_map, settings.alpha).map_err(at(Stage::Region))?;
    let set = spec.build(x_map).map_err(at(Stage::Set))?;
    let run = feasibility(&region, &set, settings).map_err(at(Stage::Engine))?;
    let rho = compute_rho(&run.x_region, &run.x_set, x_map.as_slice(), set.surrogate.as_slice())
        .map_err(at(Stage::Engine))?;
    let verdict = decide(rho, settings.eta, settings.alpha);
    let image = |v: Vec<f64>| x_map.with_data(v).map_err(at(Stage::Engine));
    Ok(TestOutcome {
        rho_alpha: rho,
        distance: run.distance,
        decision: verdict.decision,
        narrative: verdict.narrative,
        alpha: settings.alpha,
        eta_threshold: settings.eta,
        x_region: image(run.x_region)?,
        x_set: image(run.x_set)?,
        iterations: run.iterations,
        stop_reason: run.stop_reason,
        delta_series: run.delta_series,
        inner_converged: run.inner_converged,
        x_map: x_map.clone(),
        map_converged,
        surrogate: set.surrogate.clone(),
        lambda: region.lambda,
        tau_alpha: region.tau_alpha,
        eta_tilde: region.eta_tilde,
    })
}

/// `lambda` from the MAP estimate, then the region.
pub fn prepare_region(problem: &MapProblem, x_map: &Image, alpha: f64) -> Result<CredibleRegion> {
    compute_tau_alpha(alpha, problem.n_pixels())?;
    let lambda = compute_lambda(x_map, &**problem.psi())?;
    build_region(x_map, lambda, alpha, problem)
}

/// Runs the configured outer loop between a region and a set.
pub fn feasibility(region: &CredibleRegion, set: &StructureSet, settings: &BuqoSettings) -> Result<FeasibilityRun> {
    let mut pc = RegionProjector::new(region, settings.inner)?;
    let mut ps = SetProjector::new(set, settings.inner);
    match settings.mode {
        Mode::Pocs => run_pocs(&mut pc, &mut ps, set.surrogate.as_slice(), &settings.outer),
        Mode::Fb => run_fb_distance(
            &mut pc,
            &mut ps,
            region.x_map.as_slice(),
            set.surrogate.as_slice(),
            settings.fb_gamma,
            &settings.outer,
        ),
    }
}
