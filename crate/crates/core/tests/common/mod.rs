//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use buqo::operators::LinearOperator;
use buqo::scalar::Scalar;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn gaussian_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let re = gaussian_vec(rng, n);
    let im = gaussian_vec(rng, n);
    re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Real parts stacked over imaginary parts.
pub trait Realify {
    fn parts(&self) -> Vec<f64>;
}

impl Realify for f64 {
    fn parts(&self) -> Vec<f64> {
        vec![*self]
    }
}

impl Realify for Complex64 {
    fn parts(&self) -> Vec<f64> {
        vec![self.re, self.im]
    }
}

/// Dense real matrix of an operator, one forward call per basis vector.
/// Complex outputs contribute a real and an imaginary row.
pub fn dense_of<A>(op: &A) -> DMatrix<f64>
where
    A: LinearOperator + ?Sized,
    A::Output: Realify + Scalar,
{
    let n = op.in_dim();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col: Vec<f64> = op.forward(&e).iter().flat_map(|v| v.parts()).collect();
        cols.push(DVector::from_vec(col));
    }
    DMatrix::from_columns(&cols)
}

pub fn realify(y: &[Complex64]) -> Vec<f64> {
    y.iter().flat_map(|v| v.parts()).collect()
}

pub fn soft(x: &[f64], t: f64) -> Vec<f64> {
    x.iter().map(|v| v.signum() * (v.abs() - t).max(0.0)).collect()
}

/// Projection onto `{u : ||u||_1 <= beta}` by bisection on the Lagrange
/// multiplier of the constraint: `||soft(x, t)||_1` is nonincreasing in `t`.
pub fn l1_ball_bisection(x: &[f64], beta: f64) -> Vec<f64> {
    let l1 = |v: &[f64]| v.iter().map(|a| a.abs()).sum::<f64>();
    if l1(x) <= beta {
        return x.to_vec();
    }
    let (mut lo, mut hi) = (0.0, x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if l1(&soft(x, mid)) > beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    soft(x, 0.5 * (lo + hi))
}

/// Projection onto `{x : ||K x - c|| <= r}`. The minimizer is
/// `(I + mu K^T K)^{-1} (z + mu K^T c)` for the `mu >= 0` that puts it on
/// the boundary; `mu` is found by bisection in the eigenbasis of `K^T K`.
pub fn project_ball_preimage(k: &DMatrix<f64>, c: &DVector<f64>, r: f64, z: &DVector<f64>) -> DVector<f64> {
    if (k * z - c).norm() <= r {
        return z.clone();
    }
    let eig = (k.transpose() * k).symmetric_eigen();
    let q = &eig.eigenvectors;
    let rhs_z = q.transpose() * z;
    let rhs_c = q.transpose() * (k.transpose() * c);
    let at = |mu: f64| {
        let coeff = DVector::from_iterator(
            z.len(),
            (0..z.len()).map(|i| (rhs_z[i] + mu * rhs_c[i]) / (1.0 + mu * eig.eigenvalues[i])),
        );
        q * coeff
    };
    let mut hi = 1.0;
    while (k * at(hi) - c).norm() > r {
        hi *= 2.0;
        assert!(hi < 1e30, "ball preimage is empty or unbounded search");
    }
    let mut lo = 0.0;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (k * at(mid) - c).norm() > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// Projection onto `{x : lo <= a^T x <= hi}`.
pub fn project_slab(a: &DVector<f64>, lo: f64, hi: f64, z: &DVector<f64>) -> DVector<f64> {
    let s = a.dot(z);
    let aa = a.norm_squared();
    if s > hi {
        z - a * ((s - hi) / aa)
    } else if s < lo {
        z - a * ((s - lo) / aa)
    } else {
        z.clone()
    }
}

pub type SetProjection = Box<dyn Fn(&DVector<f64>) -> DVector<f64>>;

/// Dykstra's alternating projections: converges to the projection of `z`
/// onto the intersection of the sets.
pub fn dykstra(z: &DVector<f64>, sets: &[SetProjection], max_sweeps: usize, tol: f64) -> DVector<f64> {
    let mut x = z.clone();
    let mut corr: Vec<DVector<f64>> = sets.iter().map(|_| DVector::zeros(z.len())).collect();
    for _ in 0..max_sweeps {
        let prev = x.clone();
        let mut total_change = 0.0;
        for (i, p) in sets.iter().enumerate() {
            let y = &x + &corr[i];
            let nx = p(&y);
            let nc = &y - &nx;
            total_change += (&nc - &corr[i]).norm_squared();
            corr[i] = nc;
            x = nx;
        }
        if (&x - &prev).norm() <= tol * (1.0 + x.norm()) && total_change.sqrt() <= tol * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    d / n.max(1e-300)
}

use buqo::credible_region::{compute_epsilon_bound, CredibleRegion};
use buqo::engine::prepare_region;
use buqo::map_solver::{solve_map, MapProblem, MapSettings};
use buqo::operators::{Db8Wavelet, MaskedDft};
use buqo::sim::{add_noise, gaussian_random_pattern};
use buqo::structure_sets::{build_localized_set, StructureSet};
use buqo::{Image, PixelMask};
use std::sync::Arc;

/// Sparse nonnegative test image with a few bright pixels over a dim floor.
pub fn small_truth(rows: usize, cols: usize, seed: u64) -> Image {
    let mut r = rng(seed);
    let mut data: Vec<f64> = (0..rows * cols).map(|_| 0.05 * r.random::<f64>()).collect();
    for _ in 0..3 {
        let i = r.random_range(0..rows * cols);
        data[i] += 0.5 + r.random::<f64>();
    }
    Image::new(rows, cols, data).unwrap()
}

/// Noisy partial-Fourier problem with a Db8 prior on a `rows x cols` grid.
pub fn small_problem(rows: usize, cols: usize, ratio: f64, sigma: f64, seed: u64) -> (MapProblem, Image) {
    let truth = small_truth(rows, cols, seed);
    let pattern = gaussian_random_pattern(rows, cols, ratio, seed ^ 0x5eed).unwrap().pattern;
    let phi = Arc::new(MaskedDft::new(pattern).unwrap());
    let levels = Db8Wavelet::max_levels(rows, cols, 3).max(1);
    let psi = Arc::new(Db8Wavelet::new(rows, cols, levels).unwrap());
    let y = add_noise(&phi.forward(truth.as_slice()), sigma * sigma, seed ^ 0xacc).unwrap();
    let eps = compute_epsilon_bound(sigma, y.len()).unwrap();
    (MapProblem::new(phi, psi, y, eps, rows, cols).unwrap(), truth)
}

/// Region around the MAP estimate of a 4x4 problem.
pub fn small_region(seed: u64) -> CredibleRegion {
    let (problem, _) = small_problem(4, 4, 0.6, 0.05, seed);
    let map = solve_map(&problem, &MapSettings::default()).unwrap();
    prepare_region(&problem, &map.image, 0.1).unwrap()
}

fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Dykstra over the positive orthant, the data-fidelity ball and the
/// analysis l1 ball (the Db8 analysis matrix is orthogonal).
pub fn region_oracle(region: &CredibleRegion, z: &[f64]) -> Vec<f64> {
    let problem = region.problem();
    let k = dense_of(&**problem.phi());
    let c = dvec(&realify(problem.data()));
    let eps = region.epsilon();
    let w = dense_of(&**problem.psi());
    assert!((w.transpose() * &w - DMatrix::identity(z.len(), z.len())).amax() < 1e-12);
    let level = region.l1_level();
    let sets: Vec<SetProjection> = vec![
        Box::new(|v: &DVector<f64>| v.map(|a| a.max(0.0))),
        Box::new(move |v: &DVector<f64>| project_ball_preimage(&k, &c, eps, v)),
        Box::new(move |v: &DVector<f64>| {
            let coeffs = &w * v;
            w.transpose() * dvec(&l1_ball_bisection(coeffs.as_slice(), level))
        }),
    ];
    dykstra(&dvec(z), &sets, 200_000, 1e-14).as_slice().to_vec()
}

/// Localized set on a 4x4 image with a 2x2 mask.
pub fn small_localized(seed: u64) -> StructureSet {
    let x_map = small_truth(4, 4, seed);
    let mask = PixelMask::from_predicate(4, 4, |r, c| (1..3).contains(&r) && (1..3).contains(&c));
    build_localized_set(&x_map, &mask, &[3, 5]).unwrap()
}

/// Dykstra over the positive orthant, one slab per residual row and the
/// energy ball on the masked pixels.
pub fn localized_oracle(set: &StructureSet, z: &[f64]) -> Vec<f64> {
    let parts = set.localized.as_ref().expect("localized set");
    let r = dense_of(&*parts.residual);
    let (lo, hi) = (set.interval.lower(0), set.interval.upper(0));
    let idx: Vec<usize> = set.mask.indices().to_vec();
    let center = parts.energy_ball.center.clone();
    let radius = parts.energy_ball.radius;
    let mut sets: Vec<SetProjection> = vec![Box::new(|v: &DVector<f64>| v.map(|a| a.max(0.0)))];
    for i in 0..r.nrows() {
        let row = r.row(i).transpose();
        sets.push(Box::new(move |v: &DVector<f64>| project_slab(&row, lo, hi, v)));
    }
    sets.push(Box::new(move |v: &DVector<f64>| {
        let d: f64 = idx.iter().zip(&center).map(|(&i, c)| (v[i] - c).powi(2)).sum::<f64>().sqrt();
        let mut out = v.clone();
        if d > radius {
            for (&i, c) in idx.iter().zip(&center) {
                out[i] = c + (v[i] - c) * radius / d;
            }
        }
        out
    }));
    dykstra(&dvec(z), &sets, 200_000, 1e-14).as_slice().to_vec()
}
