//! Convex sets of images from which a structure has been removed, their
//! canonical member (the surrogate), and projections onto them.
//!
//! Localized structures: `x >= 0`, `M x - L(M^c x) in [lo, hi]`, `||M x - b|| <= theta`.
//! Background structures: `x >= 0`, `M x in [lo, hi]`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{ProjectionResult, Projector};
use crate::error::{check_dim, invalid, BuqoError, Result};
use crate::image::{Image, PixelMask};
use crate::map_solver::{NORM_MAX_ITERS, NORM_TOL};
use crate::operators::{op_norm, Inpainting, LinearOperator, MaskSelect, ResidualMap};
use crate::primal_dual::{self, Anchor, ConstraintBlock, DualBlock, Monitor, PdSettings};
use crate::prox::{IntervalBox, L2Ball};
use crate::scalar;

pub const DEFAULT_KERNEL_SIZES: [usize; 3] = [3, 7, 11];
pub const DEFAULT_THRESHOLD_FRAC: f64 = 1e-3;
pub const DEFAULT_DILATION_RADIUS: usize = 7;
pub const DEFAULT_VARTHETA: f64 = 1e-2;

/// Relative inflation applied to `theta` when the surrogate sits on the sphere.
const THETA_INFLATION: f64 = 1e-6;
/// Surrogate residuals allowed after construction.
const SURROGATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Localized,
    Background,
}

/// Centre of the energy ball of a localized set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BMode {
    #[default]
    Zero,
    /// `b = L(M^c x_map)`
    Inpainted,
}

/// Localized-set components that background sets lack.
#[derive(Debug, Clone)]
pub struct LocalizedParts {
    pub inpaint: Arc<Inpainting>,
    pub residual: Arc<ResidualMap>,
    pub residual_norm: f64,
    pub energy_ball: L2Ball<f64>,
}

#[derive(Debug, Clone)]
pub struct StructureSet {
    pub kind: StructureKind,
    pub mask: PixelMask,
    /// Bounds on `M x - L(M^c x)` (localized) or on `M x` (background).
    pub interval: IntervalBox,
    pub localized: Option<LocalizedParts>,
    pub surrogate: Image,
    scale: f64,
}

/// Absolute constraint violations of a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureResiduals {
    /// Distance to the nonnegative orthant.
    pub bounds: f64,
    /// Distance of the constrained vector to its interval.
    pub interval: f64,
    /// `max(0, ||M x - b|| - theta)`; zero for background sets.
    pub energy: f64,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        self.bounds.max(self.interval).max(self.energy)
    }
}

impl StructureSet {
    pub fn rows(&self) -> usize {
        self.surrogate.rows()
    }

    pub fn cols(&self) -> usize {
        self.surrogate.cols()
    }

    /// Magnitude used to turn residuals into relative ones.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The vector the interval constrains.
    pub fn constrained_part(&self, x: &[f64]) -> Vec<f64> {
        match &self.localized {
            Some(parts) => parts.residual.forward(x),
            None => self.mask.select(x),
        }
    }

    pub fn residuals(&self, x: &[f64]) -> StructureResiduals {
        let bounds = IntervalBox::nonnegative().violation(x);
        let interval = self.interval.violation(&self.constrained_part(x));
        let energy = match &self.localized {
            Some(parts) => parts.energy_ball.violation(&self.mask.select(x)),
            None => 0.0,
        };
        StructureResiduals {
            bounds,
            interval,
            energy,
        }
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        self.residuals(x).max() / self.scale
    }

    pub fn contains(&self, x: &[f64], rel_tol: f64) -> bool {
        self.relative_residual(x) <= rel_tol
    }
}

fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Optional overrides for [`build_localized_set_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalizedOptions {
    /// Half-width of the residual interval; defaults to the std of `M x_map - L(M^c x_map)`.
    pub tau: Option<f64>,
    /// Energy radius; defaults to `||L(M^c x_map)||`.
    pub theta: Option<f64>,
    pub b_mode: BMode,
}

pub fn build_localized_set(x_map: &Image, mask: &PixelMask, kernel_sizes: &[usize]) -> Result<StructureSet> {
    build_localized_set_with(x_map, mask, kernel_sizes, &LocalizedOptions::default())
}

pub fn build_localized_set_with(
    x_map: &Image,
    mask: &PixelMask,
    kernel_sizes: &[usize],
    options: &LocalizedOptions,
) -> Result<StructureSet> {
    check_dim("structure mask", x_map.len(), mask.grid_len())?;
    if mask.rows() != x_map.rows() || mask.cols() != x_map.cols() {
        return Err(invalid("mask", "mask and image shapes differ"));
    }
    let inpaint = Arc::new(Inpainting::new(mask, kernel_sizes)?);
    let residual = Arc::new(ResidualMap::new(mask, inpaint.clone())?);
    let x = x_map.as_slice();

    let filled = inpaint.inpaint_image(x);
    let tau = match options.tau {
        Some(t) if t >= 0.0 => t,
        Some(t) => return Err(invalid("tau", format!("{t} is negative"))),
        None => population_std(&residual.forward(x)),
    };
    let interval = IntervalBox::uniform(-tau, tau)?;

    let center = match options.b_mode {
        BMode::Zero => vec![0.0; mask.n_selected()],
        BMode::Inpainted => filled.clone(),
    };
    let mut theta = match options.theta {
        Some(t) if t >= 0.0 => t,
        Some(t) => return Err(invalid("theta", format!("{t} is negative"))),
        None => scalar::norm(&filled),
    };

    let mut surrogate = x.to_vec();
    for (&i, &v) in mask.indices().iter().zip(&filled) {
        surrogate[i] = v;
    }
    let needed = scalar::distance(&filled, &center);
    theta = theta.max(needed * (1.0 + THETA_INFLATION));

    let residual_norm = op_norm(&*residual, NORM_TOL, NORM_MAX_ITERS).bound;
    let scale = [theta, scalar::norm(&mask.select(x)), scalar::norm(&filled)]
        .into_iter()
        .fold(f64::MIN_POSITIVE, f64::max);
    let set = StructureSet {
        kind: StructureKind::Localized,
        mask: mask.clone(),
        interval,
        localized: Some(LocalizedParts {
            inpaint,
            residual,
            residual_norm,
            energy_ball: L2Ball::new(center, theta)?,
        }),
        surrogate: x_map.with_data(surrogate)?,
        scale,
    };
    check_surrogate(&set)?;
    Ok(set)
}

fn check_surrogate(set: &StructureSet) -> Result<()> {
    let r = set.residuals(set.surrogate.as_slice());
    if r.max() > SURROGATE_TOL * set.scale {
        return Err(BuqoError::SurrogateInfeasible(format!(
            "bounds {:e}, interval {:e}, energy {:e}",
            r.bounds, r.interval, r.energy
        )));
    }
    Ok(())
}

/// Background mask: everything farther than `dilation_radius` from a pixel
/// brighter than `threshold_frac * max(x_map)`.
pub fn background_mask(x_map: &Image, threshold_frac: f64, dilation_radius: usize) -> Result<PixelMask> {
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(invalid("threshold_frac", format!("{threshold_frac} not in ]0, 1[")));
    }
    let level = threshold_frac * x_map.max();
    let seed = PixelMask::from_predicate(x_map.rows(), x_map.cols(), |r, c| x_map.get(r, c) > level);
    Ok(seed.dilate(dilation_radius).complement())
}

pub fn build_background_set(
    x_map: &Image,
    threshold_frac: f64,
    dilation_radius: usize,
    vartheta: f64,
) -> Result<StructureSet> {
    let mask = background_mask(x_map, threshold_frac, dilation_radius)?;
    build_background_set_with_mask(x_map, &mask, vartheta)
}

/// Background set with `[lo, hi] = [0, vartheta ||M x_map|| / N_M]` and the
/// surrogate zeroed on the mask.
pub fn build_background_set_with_mask(x_map: &Image, mask: &PixelMask, vartheta: f64) -> Result<StructureSet> {
    check_dim("background mask", x_map.len(), mask.grid_len())?;
    if mask.is_empty() {
        return Err(BuqoError::EmptyMask);
    }
    if !(vartheta >= 0.0) {
        return Err(invalid("vartheta", format!("{vartheta} is negative")));
    }
    let inside = mask.select(x_map.as_slice());
    let upper = vartheta * scalar::norm(&inside) / mask.n_selected() as f64;
    let mut surrogate = x_map.as_slice().to_vec();
    for &i in mask.indices() {
        surrogate[i] = 0.0;
    }
    let scale = scalar::norm(&inside).max(f64::MIN_POSITIVE).max(x_map.norm());
    let set = StructureSet {
        kind: StructureKind::Background,
        mask: mask.clone(),
        interval: IntervalBox::uniform(0.0, upper)?,
        localized: None,
        surrogate: x_map.with_data(surrogate)?,
        scale: scale.max(f64::MIN_POSITIVE),
    };
    check_surrogate(&set)?;
    Ok(set)
}

/// Closed-form projection onto a background set: masked pixels clipped to
/// `[max(lo, 0), hi]`, the rest to `[0, inf)`.
pub fn project_background(set: &StructureSet, x: &[f64]) -> Result<Vec<f64>> {
    if set.kind != StructureKind::Background {
        return Err(invalid("set", "closed-form projection needs a background set"));
    }
    check_dim("background projection", set.mask.grid_len(), x.len())?;
    let lo = set.interval.lower(0).max(0.0);
    let hi = set.interval.upper(0);
    let mut out: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    for &i in set.mask.indices() {
        out[i] = x[i].max(lo).min(hi);
    }
    Ok(out)
}

struct LocalizedMonitor<'a> {
    set: &'a StructureSet,
    rel_tol: f64,
}

impl Monitor for LocalizedMonitor<'_> {
    fn accept(&mut self, x: &[f64]) -> bool {
        self.set.relative_residual(x) <= self.rel_tol
    }
}

struct LocalizedState {
    residual_block: ConstraintBlock<Arc<ResidualMap>, IntervalBox>,
    energy_block: ConstraintBlock<MaskSelect, L2Ball<f64>>,
}

/// Projector onto a structure set; localized sets keep warm duals between calls.
pub struct SetProjector<'a> {
    set: &'a StructureSet,
    state: Option<LocalizedState>,
    settings: PdSettings,
    pub feasibility_tol: f64,
}

impl<'a> SetProjector<'a> {
    pub fn new(set: &'a StructureSet, settings: PdSettings) -> Self {
        let state = set.localized.as_ref().map(|parts| LocalizedState {
            residual_block: ConstraintBlock::new(parts.residual.clone(), set.interval.clone(), parts.residual_norm),
            energy_block: ConstraintBlock::new(MaskSelect(set.mask.clone()), parts.energy_ball.clone(), 1.0),
        });
        Self {
            set,
            state,
            settings,
            feasibility_tol: 1e-6,
        }
    }
}

impl Projector for SetProjector<'_> {
    fn project(&mut self, x: &[f64]) -> Result<ProjectionResult> {
        let Some(state) = self.state.as_mut() else {
            return Ok(ProjectionResult {
                point: project_background(self.set, x)?,
                converged: true,
                iterations: 0,
            });
        };
        check_dim("localized projection", self.set.mask.grid_len(), x.len())?;
        let mut start = x.to_vec();
        let mut back = vec![0.0; x.len()];
        state.residual_block.add_adjoint(&mut back);
        state.energy_block.add_adjoint(&mut back);
        scalar::axpy(-1.0, &back, &mut start);
        let mut monitor = LocalizedMonitor {
            set: self.set,
            rel_tol: self.feasibility_tol,
        };
        let out = primal_dual::solve(
            &mut [&mut state.residual_block, &mut state.energy_block],
            Some(Anchor { point: x, weight: 1.0 }),
            &IntervalBox::nonnegative(),
            start,
            &self.settings,
            &mut monitor,
        )?;
        Ok(ProjectionResult {
            point: out.x,
            converged: out.converged,
            iterations: out.iterations,
        })
    }
}

/// One-off primal-dual projection onto a localized set.
pub fn project_localized(set: &StructureSet, x: &Image, settings: &PdSettings) -> Result<ProjectionResult> {
    if set.kind != StructureKind::Localized {
        return Err(invalid("set", "primal-dual projection needs a localized set"));
    }
    SetProjector::new(set, *settings).project(x.as_slice())
}

/// Everything needed to build a structure set once the MAP estimate is known.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureSpec {
    Localized {
        mask: PixelMask,
        kernel_sizes: Vec<usize>,
        options: LocalizedOptions,
    },
    Background {
        /// Derived from the MAP estimate when absent.
        mask: Option<PixelMask>,
        threshold_frac: f64,
        dilation_radius: usize,
        vartheta: f64,
    },
}

impl StructureSpec {
    pub fn localized(mask: PixelMask) -> Self {
        StructureSpec::Localized {
            mask,
            kernel_sizes: DEFAULT_KERNEL_SIZES.to_vec(),
            options: LocalizedOptions::default(),
        }
    }

    pub fn background() -> Self {
        StructureSpec::Background {
            mask: None,
            threshold_frac: DEFAULT_THRESHOLD_FRAC,
            dilation_radius: DEFAULT_DILATION_RADIUS,
            vartheta: DEFAULT_VARTHETA,
        }
    }

    pub fn kind(&self) -> StructureKind {
        match self {
            StructureSpec::Localized { .. } => StructureKind::Localized,
            StructureSpec::Background { .. } => StructureKind::Background,
        }
    }

    pub fn build(&self, x_map: &Image) -> Result<StructureSet> {
        match self {
            StructureSpec::Localized {
                mask,
                kernel_sizes,
                options,
            } => build_localized_set_with(x_map, mask, kernel_sizes, options),
            StructureSpec::Background {
                mask: Some(mask),
                vartheta,
                ..
            } => build_background_set_with_mask(x_map, mask, *vartheta),
            StructureSpec::Background {
                mask: None,
                threshold_frac,
                dilation_radius,
                vartheta,
            } => build_background_set(x_map, *threshold_frac, *dilation_radius, *vartheta),
        }
    }
}
