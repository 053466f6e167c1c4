//! MAP estimation: minimize `||Psi x||_1` over `x in C` with `||Phi x - y|| <= epsilon`.
//!
//! The l1 weight does not move the minimizer, so the solver uses weight 1 and
//! the regularization parameter is derived afterwards by [`compute_lambda`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, BuqoError, Result};
use crate::image::Image;
use crate::operators::{op_norm, ComplexOperator, LinearOperator, RealOperator};
use crate::primal_dual::{self, ConstraintBlock, L1PenaltyBlock, Monitor, PdSettings};
use crate::prox::{IntervalBox, L2Ball};
use crate::scalar;

/// Power-iteration settings used whenever a problem caches its operator norms.
pub const NORM_TOL: f64 = 1e-7;
pub const NORM_MAX_ITERS: usize = 500;

#[derive(Clone)]
pub struct MapProblem {
    phi: ComplexOperator,
    psi: RealOperator,
    data: Vec<Complex64>,
    epsilon: f64,
    constraint: IntervalBox,
    rows: usize,
    cols: usize,
    phi_norm: f64,
    psi_norm: f64,
}

impl std::fmt::Debug for MapProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapProblem")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("measurements", &self.data.len())
            .field("epsilon", &self.epsilon)
            .field("phi_norm", &self.phi_norm)
            .field("psi_norm", &self.psi_norm)
            .finish()
    }
}

impl MapProblem {
    /// Builds a problem with `C = [0, inf)^N` and estimates both operator norms.
    pub fn new(
        phi: ComplexOperator,
        psi: RealOperator,
        data: Vec<Complex64>,
        epsilon: f64,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        let n = rows * cols;
        if n == 0 {
            return Err(invalid("rows/cols", "image must have at least one pixel"));
        }
        check_dim("phi input", n, phi.in_dim())?;
        check_dim("psi input", n, psi.in_dim())?;
        check_dim("measurements", phi.out_dim(), data.len())?;
        if data.is_empty() {
            return Err(invalid("data", "no measurements"));
        }
        if let Some(i) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(BuqoError::NonFinite(i));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(invalid("epsilon", format!("{epsilon} must be positive")));
        }
        let phi_norm = op_norm(&phi, NORM_TOL, NORM_MAX_ITERS).bound;
        let psi_norm = op_norm(&psi, NORM_TOL, NORM_MAX_ITERS).bound;
        Ok(Self {
            phi,
            psi,
            data,
            epsilon,
            constraint: IntervalBox::nonnegative(),
            rows,
            cols,
            phi_norm,
            psi_norm,
        })
    }

    pub fn with_constraint(mut self, constraint: IntervalBox) -> Self {
        self.constraint = constraint;
        self
    }

    pub fn phi(&self) -> &ComplexOperator {
        &self.phi
    }

    pub fn psi(&self) -> &RealOperator {
        &self.psi
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn constraint(&self) -> &IntervalBox {
        &self.constraint
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn phi_norm(&self) -> f64 {
        self.phi_norm
    }

    pub fn psi_norm(&self) -> f64 {
        self.psi_norm
    }

    /// `||Phi x - y||`
    pub fn data_residual(&self, x: &[f64]) -> f64 {
        scalar::distance(&self.phi.forward(x), &self.data)
    }

    /// `max(0, ||Phi x - y|| - epsilon)`
    pub fn feasibility_gap(&self, x: &[f64]) -> f64 {
        (self.data_residual(x) - self.epsilon).max(0.0)
    }

    /// `||Psi x||_1`
    pub fn sparsity(&self, x: &[f64]) -> f64 {
        scalar::norm_l1(&self.psi.forward(x))
    }

    /// `P_C(Phi^T y)`
    pub fn back_projection(&self) -> Vec<f64> {
        let mut x = self.phi.adjoint(&self.data);
        self.constraint.project_in_place(&mut x);
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSettings {
    pub tol: f64,
    pub max_iters: usize,
    /// Weight of the `l1` term. The minimizer does not depend on it; only
    /// the iteration path does.
    pub weight: f64,
}

impl Default for MapSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 20_000,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// Relative primal change per iteration.
    pub primal_residuals: Vec<f64>,
    /// Feasibility gap of the returned image.
    pub feasibility_gap: f64,
    /// `||Psi x||_1` per iteration.
    pub objective_series: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MapEstimate {
    pub image: Image,
    pub diagnostics: SolverDiagnostics,
    pub converged: bool,
}

struct MapMonitor<'a> {
    problem: &'a MapProblem,
    gap_tol: f64,
    diag: SolverDiagnostics,
    last_gap: f64,
    best: Option<(f64, Vec<f64>)>,
}

impl Monitor for MapMonitor<'_> {
    fn record(&mut self, iteration: usize, x: &[f64], rel_change: f64) {
        let objective = self.problem.sparsity(x);
        let gap = self.problem.feasibility_gap(x);
        self.diag.iterations = iteration;
        self.diag.primal_residuals.push(rel_change);
        self.diag.objective_series.push(objective);
        self.last_gap = gap;
        if gap <= self.gap_tol && self.best.as_ref().is_none_or(|(b, _)| objective < *b) {
            self.best = Some((objective, x.to_vec()));
        }
    }

    fn accept(&mut self, _x: &[f64]) -> bool {
        self.last_gap <= self.gap_tol
    }
}

/// Primal-dual solve of the MAP problem, started from `P_C(Phi^T y)` with zero duals.
pub fn solve_map(problem: &MapProblem, settings: &MapSettings) -> Result<MapEstimate> {
    if !(settings.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if !(settings.weight > 0.0 && settings.weight.is_finite()) {
        return Err(invalid("weight", "must be positive"));
    }
    let ball = L2Ball::new(problem.data.clone(), problem.epsilon)?;
    let mut data_block = ConstraintBlock::new(problem.phi.clone(), ball, problem.phi_norm);
    let mut l1_block = L1PenaltyBlock::new(problem.psi.clone(), settings.weight, problem.psi_norm);
    let mut monitor = MapMonitor {
        problem,
        gap_tol: 1e-6 * problem.epsilon,
        diag: SolverDiagnostics::default(),
        last_gap: f64::INFINITY,
        best: None,
    };
    let pd = PdSettings {
        tol: settings.tol,
        max_iters: settings.max_iters,
        gamma: 1.0,
    };
    let out = primal_dual::solve(
        &mut [&mut data_block, &mut l1_block],
        None,
        &problem.constraint,
        problem.back_projection(),
        &pd,
        &mut monitor,
    )?;
    let MapMonitor { mut diag, best, .. } = monitor;
    let x = match (out.converged, best) {
        (true, _) | (false, None) => out.x,
        (false, Some((_, b))) => b,
    };
    diag.feasibility_gap = problem.feasibility_gap(&x);
    if out.converged {
        log::debug!("MAP converged after {} iterations", out.iterations);
    } else {
        log::warn!("MAP solver hit {} iterations without converging", settings.max_iters);
    }
    Ok(MapEstimate {
        image: Image::new(problem.rows, problem.cols, x)?,
        diagnostics: diag,
        converged: out.converged,
    })
}

/// `lambda = N / ||Psi x_map||_1`
pub fn compute_lambda<A: LinearOperator<Output = f64> + ?Sized>(x_map: &Image, psi: &A) -> Result<f64> {
    check_dim("psi input", psi.in_dim(), x_map.len())?;
    let l1 = scalar::norm_l1(&psi.forward(x_map.as_slice()));
    if !(l1 > 0.0) {
        return Err(BuqoError::DegenerateMap);
    }
    Ok(x_map.len() as f64 / l1)
}
