//! Euclidean projections onto the simple convex sets used by the sub-solvers.

use crate::error::{invalid, Result};
use crate::scalar::{self, Scalar};

/// A closed convex set with a closed-form Euclidean projection.
pub trait ConvexSet<T: Scalar> {
    fn project(&self, x: &[T]) -> Vec<T>;
}

#[derive(Debug, Clone, PartialEq)]
enum Limits {
    Uniform(f64),
    PerCoordinate(Vec<f64>),
}

impl Limits {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            Limits::Uniform(v) => *v,
            Limits::PerCoordinate(v) => v[i],
        }
    }
}

/// Product of intervals `[lo_i, hi_i]`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    lo: Limits,
    hi: Limits,
}

impl IntervalBox {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(invalid("box", format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self {
            lo: Limits::Uniform(lo),
            hi: Limits::Uniform(hi),
        })
    }

    pub fn per_coordinate(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(invalid("box", "lower and upper bounds differ in length"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l.is_nan() || h.is_nan() || l > h) {
            return Err(invalid("box", "lower bound exceeds upper bound"));
        }
        Ok(Self {
            lo: Limits::PerCoordinate(lo),
            hi: Limits::PerCoordinate(hi),
        })
    }

    /// `[0, +inf)^n`
    pub fn nonnegative() -> Self {
        Self {
            lo: Limits::Uniform(0.0),
            hi: Limits::Uniform(f64::INFINITY),
        }
    }

    pub fn unconstrained() -> Self {
        Self {
            lo: Limits::Uniform(f64::NEG_INFINITY),
            hi: Limits::Uniform(f64::INFINITY),
        }
    }

    pub fn lower(&self, i: usize) -> f64 {
        self.lo.at(i)
    }

    pub fn upper(&self, i: usize) -> f64 {
        self.hi.at(i)
    }

    pub fn project_in_place(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.max(self.lo.at(i)).min(self.hi.at(i));
        }
    }

    /// Distance from `x` to the box.
    pub fn violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let d = (self.lo.at(i) - v).max(v - self.hi.at(i)).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

impl ConvexSet<f64> for IntervalBox {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        project_box(x, self)
    }
}

/// `B_2(center, radius)`
#[derive(Debug, Clone, PartialEq)]
pub struct L2Ball<T: Scalar> {
    pub center: Vec<T>,
    pub radius: f64,
}

impl<T: Scalar> L2Ball<T> {
    pub fn new(center: Vec<T>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(invalid("radius", format!("{radius} is negative")));
        }
        Ok(Self { center, radius })
    }

    /// `max(0, ||x - c|| - r)`
    pub fn violation(&self, x: &[T]) -> f64 {
        (scalar::distance(x, &self.center) - self.radius).max(0.0)
    }
}

impl<T: Scalar> ConvexSet<T> for L2Ball<T> {
    fn project(&self, x: &[T]) -> Vec<T> {
        project_l2_ball(x, self)
    }
}

/// Sublevel set `{u : ||u||_1 <= level}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Levelset {
    pub level: f64,
}

impl L1Levelset {
    pub fn new(level: f64) -> Result<Self> {
        if !(level >= 0.0) {
            return Err(invalid("level", format!("{level} is negative")));
        }
        Ok(Self { level })
    }
}

impl ConvexSet<f64> for L1Levelset {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        project_l1_levelset(x, self)
    }
}

pub fn project_box(x: &[f64], bounds: &IntervalBox) -> Vec<f64> {
    let mut out = x.to_vec();
    bounds.project_in_place(&mut out);
    out
}

pub fn project_l2_ball<T: Scalar>(x: &[T], ball: &L2Ball<T>) -> Vec<T> {
    let d = scalar::distance(x, &ball.center);
    if d <= ball.radius {
        return x.to_vec();
    }
    let s = ball.radius / d;
    x.iter()
        .zip(&ball.center)
        .map(|(&xi, &ci)| ci + (xi - ci) * s)
        .collect()
}

/// Sort-based projection onto the l1 ball: soft-thresholding at the exact
/// Lagrange multiplier.
pub fn project_l1_levelset(x: &[f64], set: &L1Levelset) -> Vec<f64> {
    let beta = set.level;
    if scalar::norm_l1(x) <= beta {
        return x.to_vec();
    }
    if beta == 0.0 {
        return vec![0.0; x.len()];
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - beta) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    x.iter()
        .map(|&v| v.signum() * (v.abs() - theta).max(0.0))
        .collect()
}
