//! Conservative credible region
//!
//! ```text
//! C = { x in C_box : ||Phi x - y|| <= epsilon, lambda ||Psi x||_1 <= eta },
//! eta = lambda ||Psi x_map||_1 + N (tau + 1),  tau = sqrt(16 ln(3 / alpha) / N)
//! ```
//!
//! and the primal-dual projection onto it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{ProjectionResult, Projector};
use crate::error::{check_dim, invalid, BuqoError, Result};
use crate::image::Image;
use crate::map_solver::MapProblem;
use crate::operators::{ComplexOperator, RealOperator};
use crate::primal_dual::{self, Anchor, ConstraintBlock, DualBlock, Monitor, PdSettings};
use crate::prox::{L1Levelset, L2Ball};
use crate::scalar;

/// Lower end of the admissible significance range, `4 exp(-N/3)`.
pub fn alpha_lower_bound(n: usize) -> f64 {
    4.0 * (-(n as f64) / 3.0).exp()
}

/// `sqrt(16 ln(3 / alpha) / n)`, defined for `alpha` in `]4 exp(-n/3), 1[`.
pub fn compute_tau_alpha(alpha: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    let lower = alpha_lower_bound(n);
    if !(alpha > lower && alpha < 1.0) {
        return Err(BuqoError::AlphaOutOfRange { alpha, lower });
    }
    Ok((16.0 * (3.0 / alpha).ln() / n as f64).sqrt())
}

/// Two-standard-deviation bound on the norm of complex Gaussian noise with
/// per-part standard deviation `sigma` over `m` measurements:
/// `sigma sqrt(2m + 2 sqrt(4m))`.
pub fn compute_epsilon_bound(sigma: f64, m: usize) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", format!("{sigma} must be positive")));
    }
    if m == 0 {
        return Err(invalid("m", "must be positive"));
    }
    let m = m as f64;
    Ok(sigma * (2.0 * m + 2.0 * (4.0 * m).sqrt()).sqrt())
}

/// Constraint violations relative to the size of each constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionResiduals {
    /// Distance to the box.
    pub bounds: f64,
    /// `max(0, ||Phi x - y|| - epsilon) / epsilon`
    pub data: f64,
    /// `max(0, lambda ||Psi x||_1 - eta) / eta`
    pub sparsity: f64,
}

impl RegionResiduals {
    pub fn max(&self) -> f64 {
        self.bounds.max(self.data).max(self.sparsity)
    }
}

#[derive(Debug, Clone)]
pub struct CredibleRegion {
    pub alpha: f64,
    pub tau_alpha: f64,
    pub eta_tilde: f64,
    pub lambda: f64,
    pub x_map: Image,
    problem: MapProblem,
}

impl CredibleRegion {
    pub fn epsilon(&self) -> f64 {
        self.problem.epsilon()
    }

    pub fn problem(&self) -> &MapProblem {
        &self.problem
    }

    /// Level of the l1 ball in the analysis domain, `eta / lambda`.
    pub fn l1_level(&self) -> f64 {
        self.eta_tilde / self.lambda
    }

    pub fn residuals(&self, x: &[f64]) -> RegionResiduals {
        let bounds = self.problem.constraint().violation(x);
        let data = self.problem.feasibility_gap(x) / self.epsilon();
        let sparsity = (self.lambda * self.problem.sparsity(x) - self.eta_tilde).max(0.0) / self.eta_tilde;
        RegionResiduals { bounds, data, sparsity }
    }

    pub fn contains(&self, x: &[f64], rel_tol: f64) -> bool {
        self.residuals(x).max() <= rel_tol
    }
}

/// Assembles the region around a MAP estimate that is feasible for `problem`.
pub fn build_region(x_map: &Image, lambda: f64, alpha: f64, problem: &MapProblem) -> Result<CredibleRegion> {
    check_dim("MAP image", problem.n_pixels(), x_map.len())?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", format!("{lambda} must be positive")));
    }
    let n = x_map.len();
    let tau_alpha = compute_tau_alpha(alpha, n)?;
    let residual = problem.data_residual(x_map.as_slice());
    if residual > problem.epsilon() * (1.0 + 1e-6) {
        return Err(BuqoError::InfeasibleMap {
            residual,
            epsilon: problem.epsilon(),
        });
    }
    let eta_tilde = lambda * problem.sparsity(x_map.as_slice()) + n as f64 * (tau_alpha + 1.0);
    Ok(CredibleRegion {
        alpha,
        tau_alpha,
        eta_tilde,
        lambda,
        x_map: x_map.clone(),
        problem: problem.clone(),
    })
}

struct Feasible<'a> {
    region: &'a CredibleRegion,
    rel_tol: f64,
}

impl Monitor for Feasible<'_> {
    fn accept(&mut self, x: &[f64]) -> bool {
        let r = self.region.residuals(x);
        r.data <= self.rel_tol && r.sparsity <= self.rel_tol
    }
}

/// Stateful projector onto a region. Dual variables persist between calls so
/// successive projections of nearby points start warm.
pub struct RegionProjector<'a> {
    region: &'a CredibleRegion,
    data_block: ConstraintBlock<ComplexOperator, L2Ball<Complex64>>,
    l1_block: ConstraintBlock<RealOperator, L1Levelset>,
    settings: PdSettings,
    /// Relative slack accepted on the data and sparsity constraints.
    pub feasibility_tol: f64,
}

impl<'a> RegionProjector<'a> {
    pub fn new(region: &'a CredibleRegion, settings: PdSettings) -> Result<Self> {
        let p = &region.problem;
        let ball = L2Ball::new(p.data().to_vec(), p.epsilon())?;
        let level = L1Levelset::new(region.l1_level())?;
        Ok(Self {
            region,
            data_block: ConstraintBlock::new(p.phi().clone(), ball, p.phi_norm()),
            l1_block: ConstraintBlock::new(p.psi().clone(), level, p.psi_norm()),
            settings,
            feasibility_tol: 1e-6,
        })
    }

    pub fn reset(&mut self) {
        self.data_block.reset();
        self.l1_block.reset();
    }
}

impl Projector for RegionProjector<'_> {
    fn project(&mut self, x: &[f64]) -> Result<ProjectionResult> {
        let p = &self.region.problem;
        check_dim("region projection", p.n_pixels(), x.len())?;
        // Fixed point of the primal step for the current duals.
        let mut start = x.to_vec();
        let mut back = vec![0.0; x.len()];
        self.data_block.add_adjoint(&mut back);
        self.l1_block.add_adjoint(&mut back);
        scalar::axpy(-1.0, &back, &mut start);
        let mut monitor = Feasible {
            region: self.region,
            rel_tol: self.feasibility_tol,
        };
        let out = primal_dual::solve(
            &mut [&mut self.data_block, &mut self.l1_block],
            Some(Anchor { point: x, weight: 1.0 }),
            p.constraint(),
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

/// One-off projection with cold duals.
pub fn project_region(region: &CredibleRegion, x: &Image, settings: &PdSettings) -> Result<ProjectionResult> {
    RegionProjector::new(region, *settings)?.project(x.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_solver::{compute_lambda, solve_map, MapSettings};
    use crate::operators::{Db8Wavelet, LinearOperator, MaskedDft, SamplingPattern};
    use std::sync::Arc;

    #[test]
    fn tau_examples() {
        assert!(compute_tau_alpha(3.0, 100).is_err());
        assert!(compute_tau_alpha(1.0, 100).is_err());
        assert!(compute_tau_alpha(1e-30, 12).is_err());
        let n = 64;
        let alpha = 3.0 * (-(n as f64) / 16.0).exp();
        assert!((compute_tau_alpha(alpha, n).unwrap() - 1.0).abs() < 1e-14);
        assert!((compute_tau_alpha(0.01, 65536).unwrap() - 0.037_316_551_531_8).abs() < 1e-12);
    }

    #[test]
    fn epsilon_examples() {
        assert!((compute_epsilon_bound(1.0, 1).unwrap() - 6f64.sqrt()).abs() < 1e-15);
        let e = compute_epsilon_bound(0.1, 32768).unwrap();
        assert!((e - 25.741_032_874_369_1).abs() < 1e-10);
        assert!((compute_epsilon_bound(0.2, 32768).unwrap() - 2.0 * e).abs() < 1e-12);
        assert!(compute_epsilon_bound(0.0, 3).is_err());
    }

    fn small_region() -> CredibleRegion {
        let (rows, cols) = (8, 8);
        let truth: Vec<f64> = (0..64).map(|i| if (i / 8 + i % 8) % 5 == 0 { 1.0 } else { 0.1 }).collect();
        let phi: ComplexOperator = Arc::new(MaskedDft::new(SamplingPattern::full(rows, cols)).unwrap());
        let psi: RealOperator = Arc::new(Db8Wavelet::new(rows, cols, 1).unwrap());
        let y = phi.forward(&truth);
        let problem = MapProblem::new(phi, psi.clone(), y, 0.3, rows, cols).unwrap();
        let map = solve_map(&problem, &MapSettings::default()).unwrap();
        let lambda = compute_lambda(&map.image, &psi).unwrap();
        build_region(&map.image, lambda, 0.01, &problem).unwrap()
    }

    #[test]
    fn eta_assembly_and_membership_of_map() {
        let region = small_region();
        let n = 64.0;
        let expected = region.lambda * region.problem().sparsity(region.x_map.as_slice()) + n * (region.tau_alpha + 1.0);
        assert_eq!(region.eta_tilde, expected);
        assert!(region.contains(region.x_map.as_slice(), 1e-6));
    }

    #[test]
    fn projection_lands_in_region() {
        let region = small_region();
        let far = Image::from_fn(8, 8, |r, c| if r == c { 5.0 } else { -1.0 });
        let out = project_region(&region, &far, &PdSettings::default()).unwrap();
        assert!(out.converged);
        assert!(region.contains(&out.point, 1e-6));
        let again = project_region(&region, &Image::new(8, 8, out.point.clone()).unwrap(), &PdSettings::default()).unwrap();
        assert!(scalar::distance(&again.point, &out.point) <= 1e-6 * scalar::norm(&out.point));
    }

    #[test]
    fn infeasible_map_rejected() {
        let region = small_region();
        let bad = Image::filled(8, 8, 10.0);
        assert!(matches!(
            build_region(&bad, 1.0, 0.01, region.problem()),
            Err(BuqoError::InfeasibleMap { .. })
        ));
    }
}
