//! Linear operators acting on real images.
//!
//! Every operator maps `R^N` into a real or complex vector space. Adjoints are
//! taken with respect to the real inner product, so for a complex-valued
//! operator the adjoint ends with a projection onto the real part.

mod fourier;
mod inpaint;
mod wavelet;

pub use fourier::{MaskedDft, MultiCoil, SamplingPattern};
pub use inpaint::{Inpainting, KernelSpec, MaskSelect, ResidualMap};
pub use wavelet::{Db8Wavelet, DB8_LOWPASS};

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Result};
use crate::scalar::{self, Scalar};

/// Safety inflation applied to power-iteration estimates before they are
/// used in step-size conditions.
pub const NORM_SAFETY_FACTOR: f64 = 1.01;

pub trait LinearOperator: Send + Sync {
    type Output: Scalar;

    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn forward(&self, x: &[f64]) -> Vec<Self::Output>;
    fn adjoint(&self, y: &[Self::Output]) -> Vec<f64>;
}

pub type RealOperator = Arc<dyn LinearOperator<Output = f64>>;
pub type ComplexOperator = Arc<dyn LinearOperator<Output = Complex64>>;

impl<T: LinearOperator + ?Sized> LinearOperator for Arc<T> {
    type Output = T::Output;
    fn in_dim(&self) -> usize {
        (**self).in_dim()
    }
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn forward(&self, x: &[f64]) -> Vec<Self::Output> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &[Self::Output]) -> Vec<f64> {
        (**self).adjoint(y)
    }
}

/// Result of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// Raw estimate of the largest singular value.
    pub estimate: f64,
    /// `estimate` inflated by [`NORM_SAFETY_FACTOR`].
    pub bound: f64,
    pub iterations: usize,
    /// `false` when `max_iters` was hit before the relative change fell below `tol`.
    pub converged: bool,
}

/// Power iteration on `A^T A`.
pub fn op_norm<A: LinearOperator + ?Sized>(op: &A, tol: f64, max_iters: usize) -> NormEstimate {
    assert!(tol > 0.0, "tol must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
    let mut u: Vec<f64> = (0..op.in_dim()).map(|_| rng.random::<f64>() - 0.5).collect();
    let n0 = scalar::norm(&u);
    u.iter_mut().for_each(|v| *v /= n0);
    let mut prev = 0.0;
    let mut estimate = 0.0;
    for it in 1..=max_iters {
        let w = op.adjoint(&op.forward(&u));
        let nw = scalar::norm(&w);
        estimate = nw.sqrt();
        if nw == 0.0 {
            return NormEstimate {
                estimate: 0.0,
                bound: 0.0,
                iterations: it,
                converged: true,
            };
        }
        u = w.into_iter().map(|v| v / nw).collect();
        if (estimate - prev).abs() < tol * estimate {
            return NormEstimate {
                estimate,
                bound: estimate * NORM_SAFETY_FACTOR,
                iterations: it,
                converged: true,
            };
        }
        prev = estimate;
    }
    NormEstimate {
        estimate,
        bound: estimate * NORM_SAFETY_FACTOR,
        iterations: max_iters,
        converged: false,
    }
}

/// Relative adjoint mismatch `|<Au, v> - <u, A^T v>| / (||Au|| ||v|| + ||u|| ||A^T v||)`.
pub fn adjoint_mismatch<A: LinearOperator + ?Sized>(op: &A, u: &[f64], v: &[A::Output]) -> f64 {
    let au = op.forward(u);
    let atv = op.adjoint(v);
    let lhs = scalar::dot(&au, v);
    let rhs = scalar::dot(u, &atv);
    let scale = scalar::norm(&au) * scalar::norm(v) + scalar::norm(u) * scalar::norm(&atv);
    if scale == 0.0 {
        (lhs - rhs).abs()
    } else {
        (lhs - rhs).abs() / scale
    }
}

/// The identity on `R^n`.
#[derive(Debug, Clone)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    type Output = f64;
    fn in_dim(&self) -> usize {
        self.0
    }
    fn out_dim(&self) -> usize {
        self.0
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
}

/// Row-major dense matrix with real or complex entries.
#[derive(Debug, Clone)]
pub struct DenseMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        check_dim("dense matrix", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    /// Assembles the matrix of an operator column by column.
    pub fn assemble<A: LinearOperator<Output = T> + ?Sized>(op: &A) -> Self {
        let (m, n) = (op.out_dim(), op.in_dim());
        let mut data = vec![T::default(); m * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = op.forward(&e);
            for i in 0..m {
                data[i * n + j] = col[i];
            }
            e[j] = 0.0;
        }
        Self {
            rows: m,
            cols: n,
            data,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.cols + col]
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }
}

impl DenseMatrix<f64> {
    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut data = vec![0.0; n * n];
        for (i, &d) in entries.iter().enumerate() {
            data[i * n + i] = d;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

impl DenseMatrix<Complex64> {
    /// Real matrix of size `2M x N` acting on `R^N` with output `(Re, Im)` stacked.
    pub fn realify(&self) -> DenseMatrix<f64> {
        let mut data = vec![0.0; 2 * self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = self.get(i, j);
                data[i * self.cols + j] = z.re;
                data[(self.rows + i) * self.cols + j] = z.im;
            }
        }
        DenseMatrix {
            rows: 2 * self.rows,
            cols: self.cols,
            data,
        }
    }
}

impl<T: Scalar> LinearOperator for DenseMatrix<T> {
    type Output = T;
    fn in_dim(&self) -> usize {
        self.cols
    }
    fn out_dim(&self) -> usize {
        self.rows
    }
    fn forward(&self, x: &[f64]) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                let mut acc = T::default();
                for (j, &xj) in x.iter().enumerate() {
                    acc += self.data[i * self.cols + j] * xj;
                }
                acc
            })
            .collect()
    }
    fn adjoint(&self, y: &[T]) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self.data[i * self.cols + j].inner(y[i]))
                    .sum()
            })
            .collect()
    }
}
