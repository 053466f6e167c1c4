//! Primal-dual forward-backward iteration for
//!
//! ```text
//! minimize  w/2 ||u - z||^2 + i_C(u) + sum_i g_i(K_i u)
//! ```
//!
//! where `C` is a box and each `g_i` is either the indicator of a convex set
//! or a weighted l1 norm. The update is
//!
//! ```text
//! u+  = P_C(u - s (w (u - z) + sum_i K_i^T v_i))
//! v_i = prox_{g g_i^*}(v_i + g K_i (2 u+ - u))
//! ```
//!
//! with the conjugate prox evaluated through Moreau's identity.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::operators::LinearOperator;
use crate::prox::{ConvexSet, IntervalBox};
use crate::scalar;

/// One `g_i(K_i u)` term together with its dual variable.
pub trait DualBlock: Send {
    fn in_dim(&self) -> usize;
    /// Cached upper bound on `||K_i||`.
    fn norm_bound(&self) -> f64;
    /// `out += K_i^T v_i`
    fn add_adjoint(&self, out: &mut [f64]);
    /// Dual step at the extrapolated point `x_bar = 2 u+ - u`.
    fn update(&mut self, x_bar: &[f64], gamma: f64);
    fn reset(&mut self);
}

/// `g = i_S` for a convex set `S` in the range of `K`.
pub struct ConstraintBlock<A: LinearOperator, S: ConvexSet<A::Output>> {
    op: A,
    set: S,
    norm: f64,
    dual: Vec<A::Output>,
}

impl<A: LinearOperator, S: ConvexSet<A::Output>> ConstraintBlock<A, S> {
    pub fn new(op: A, set: S, norm_bound: f64) -> Self {
        let dual = vec![A::Output::default(); op.out_dim()];
        Self {
            op,
            set,
            norm: norm_bound,
            dual,
        }
    }

    pub fn set(&self) -> &S {
        &self.set
    }

    pub fn set_mut(&mut self) -> &mut S {
        &mut self.set
    }

    pub fn op(&self) -> &A {
        &self.op
    }
}

impl<A, S> DualBlock for ConstraintBlock<A, S>
where
    A: LinearOperator,
    S: ConvexSet<A::Output> + Send,
{
    fn in_dim(&self) -> usize {
        self.op.in_dim()
    }

    fn norm_bound(&self) -> f64 {
        self.norm
    }

    fn add_adjoint(&self, out: &mut [f64]) {
        let back = self.op.adjoint(&self.dual);
        scalar::axpy(1.0, &back, out);
    }

    fn update(&mut self, x_bar: &[f64], gamma: f64) {
        let kx = self.op.forward(x_bar);
        let mut scaled = Vec::with_capacity(kx.len());
        for (v, k) in self.dual.iter_mut().zip(kx) {
            *v += k * gamma;
            scaled.push(*v * (1.0 / gamma));
        }
        let p = self.set.project(&scaled);
        for (v, pi) in self.dual.iter_mut().zip(p) {
            *v -= pi * gamma;
        }
    }

    fn reset(&mut self) {
        self.dual.iter_mut().for_each(|v| *v = A::Output::default());
    }
}

/// `g = weight * ||.||_1`; its conjugate prox is a clip to `[-weight, weight]`.
pub struct L1PenaltyBlock<A: LinearOperator<Output = f64>> {
    op: A,
    weight: f64,
    norm: f64,
    dual: Vec<f64>,
}

impl<A: LinearOperator<Output = f64>> L1PenaltyBlock<A> {
    pub fn new(op: A, weight: f64, norm_bound: f64) -> Self {
        let dual = vec![0.0; op.out_dim()];
        Self {
            op,
            weight,
            norm: norm_bound,
            dual,
        }
    }
}

impl<A: LinearOperator<Output = f64>> DualBlock for L1PenaltyBlock<A> {
    fn in_dim(&self) -> usize {
        self.op.in_dim()
    }

    fn norm_bound(&self) -> f64 {
        self.norm
    }

    fn add_adjoint(&self, out: &mut [f64]) {
        let back = self.op.adjoint(&self.dual);
        scalar::axpy(1.0, &back, out);
    }

    fn update(&mut self, x_bar: &[f64], gamma: f64) {
        let kx = self.op.forward(x_bar);
        let w = self.weight;
        for (v, k) in self.dual.iter_mut().zip(kx) {
            *v = (*v + gamma * k).clamp(-w, w);
        }
    }

    fn reset(&mut self) {
        self.dual.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdSettings {
    /// Relative primal change threshold.
    pub tol: f64,
    pub max_iters: usize,
    /// Dual step size.
    pub gamma: f64,
}

impl Default for PdSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 5000,
            gamma: 1.0,
        }
    }
}

impl PdSettings {
    /// Primal step `0.99 / (1/2 + gamma * sum ||K_i||^2)`.
    pub fn primal_step(&self, blocks: &[&mut dyn DualBlock]) -> f64 {
        let sq: f64 = blocks.iter().map(|b| b.norm_bound().powi(2)).sum();
        0.99 / (0.5 + self.gamma * sq)
    }
}

/// Hooks into the iteration. `record` sees every iterate; `accept` is asked
/// only once the relative change is below tolerance and can veto stopping.
pub trait Monitor {
    fn record(&mut self, _iteration: usize, _x: &[f64], _rel_change: f64) {}
    fn accept(&mut self, _x: &[f64]) -> bool {
        true
    }
}

impl Monitor for () {}

#[derive(Debug, Clone, PartialEq)]
pub struct PdOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rel_change: f64,
}

/// The smooth part `w/2 ||u - z||^2`; absent for pure penalty problems.
#[derive(Debug, Clone, Copy)]
pub struct Anchor<'a> {
    pub point: &'a [f64],
    pub weight: f64,
}

pub fn solve(
    blocks: &mut [&mut dyn DualBlock],
    anchor: Option<Anchor<'_>>,
    constraint: &IntervalBox,
    x0: Vec<f64>,
    settings: &PdSettings,
    monitor: &mut dyn Monitor,
) -> Result<PdOutcome> {
    let n = x0.len();
    for b in blocks.iter() {
        check_dim("primal-dual block", n, b.in_dim())?;
    }
    if let Some(a) = anchor {
        check_dim("primal-dual anchor", n, a.point.len())?;
    }
    let sigma = settings.primal_step(blocks);
    let gamma = settings.gamma;

    let mut x = x0;
    constraint.project_in_place(&mut x);
    let mut grad = vec![0.0; n];
    let mut rel = f64::INFINITY;
    for it in 1..=settings.max_iters {
        match anchor {
            Some(a) => {
                for ((g, &xi), &zi) in grad.iter_mut().zip(&x).zip(a.point) {
                    *g = a.weight * (xi - zi);
                }
            }
            None => grad.iter_mut().for_each(|g| *g = 0.0),
        }
        for b in blocks.iter() {
            b.add_adjoint(&mut grad);
        }
        let mut next: Vec<f64> = x.iter().zip(&grad).map(|(&xi, &gi)| xi - sigma * gi).collect();
        constraint.project_in_place(&mut next);

        let x_bar: Vec<f64> = next.iter().zip(&x).map(|(&a, &b)| 2.0 * a - b).collect();
        for b in blocks.iter_mut() {
            b.update(&x_bar, gamma);
        }

        let step = scalar::distance(&next, &x);
        let scale = scalar::norm(&next).max(f64::MIN_POSITIVE);
        rel = step / scale;
        x = next;
        monitor.record(it, &x, rel);
        // The first step from a zero dual can be stationary without being optimal.
        if it > 1 && rel <= settings.tol && monitor.accept(&x) {
            return Ok(PdOutcome {
                x,
                iterations: it,
                converged: true,
                rel_change: rel,
            });
        }
    }
    Ok(PdOutcome {
        x,
        iterations: settings.max_iters,
        converged: false,
        rel_change: rel,
    })
}
