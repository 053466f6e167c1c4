//! Normalized-convolution inpainting `L: R^{N - N_M} -> R^{N_M}`, the mask
//! selector `M`, and the residual map `M - L o M^c`.

use std::sync::Arc;

use super::LinearOperator;
use crate::error::{check_dim, invalid, BuqoError, Result};
use crate::image::PixelMask;

/// One square Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub size: usize,
    pub sigma: f64,
}

impl KernelSpec {
    /// Kernel of odd `size` with standard deviation `size / 4`.
    pub fn with_default_width(size: usize) -> Self {
        Self {
            size,
            sigma: size as f64 / 4.0,
        }
    }
}

/// Average of per-kernel normalized convolutions that fill the masked pixels
/// from the observed (unmasked) ones.
///
/// Each output row holds nonnegative weights summing to one. A kernel whose
/// support contains no observed pixel is left out of the average for that
/// pixel.
#[derive(Debug, Clone)]
pub struct Inpainting {
    mask: PixelMask,
    complement: PixelMask,
    weights: Vec<Vec<(usize, f64)>>,
}

impl Inpainting {
    /// Kernels of the given odd sizes with `sigma = size / 4`.
    pub fn new(mask: &PixelMask, kernel_sizes: &[usize]) -> Result<Self> {
        let kernels: Vec<KernelSpec> = kernel_sizes
            .iter()
            .map(|&k| KernelSpec::with_default_width(k))
            .collect();
        Self::with_kernels(mask, &kernels)
    }

    pub fn with_kernels(mask: &PixelMask, kernels: &[KernelSpec]) -> Result<Self> {
        if kernels.is_empty() {
            return Err(invalid("kernel_sizes", "at least one kernel is required"));
        }
        for k in kernels {
            if k.size % 2 == 0 {
                return Err(invalid("kernel_sizes", format!("kernel size {} is not odd", k.size)));
            }
            if !(k.sigma > 0.0) {
                return Err(invalid("sigma", "kernel width must be positive"));
            }
        }
        if mask.is_empty() {
            return Err(invalid("mask", "mask selects no pixel"));
        }
        let complement = mask.complement();
        if complement.is_empty() {
            return Err(invalid("mask", "mask covers the whole image"));
        }
        let (rows, cols) = (mask.rows() as isize, mask.cols() as isize);
        let mut position = vec![usize::MAX; mask.grid_len()];
        for (j, &i) in complement.indices().iter().enumerate() {
            position[i] = j;
        }

        let mut weights = Vec::with_capacity(mask.n_selected());
        for &p in mask.indices() {
            let (pr, pc) = ((p as isize) / cols, (p as isize) % cols);
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut contributing = 0usize;
            for k in kernels {
                let half = (k.size / 2) as isize;
                let mut local = Vec::new();
                let mut total = 0.0;
                for dr in -half..=half {
                    for dc in -half..=half {
                        let (qr, qc) = (pr + dr, pc + dc);
                        if qr < 0 || qr >= rows || qc < 0 || qc >= cols {
                            continue;
                        }
                        let j = position[(qr * cols + qc) as usize];
                        if j == usize::MAX {
                            continue;
                        }
                        let w = (-((dr * dr + dc * dc) as f64) / (2.0 * k.sigma * k.sigma)).exp();
                        local.push((j, w));
                        total += w;
                    }
                }
                if total > 0.0 {
                    contributing += 1;
                    row.extend(local.into_iter().map(|(j, w)| (j, w / total)));
                }
            }
            if contributing == 0 {
                return Err(BuqoError::UnsupportedPixel(p));
            }
            // merge duplicate columns and average over contributing kernels
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, w) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += w,
                    _ => merged.push((j, w)),
                }
            }
            let inv = 1.0 / contributing as f64;
            merged.iter_mut().for_each(|e| e.1 *= inv);
            weights.push(merged);
        }
        Ok(Self {
            mask: mask.clone(),
            complement,
            weights,
        })
    }

    pub fn mask(&self) -> &PixelMask {
        &self.mask
    }

    pub fn complement(&self) -> &PixelMask {
        &self.complement
    }

    /// Sparse weights of output pixel `i` as `(complement position, weight)`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.weights[i]
    }

    /// `L(M^c(x))` for a full image `x`.
    pub fn inpaint_image(&self, x: &[f64]) -> Vec<f64> {
        self.forward(&self.complement.select(x))
    }
}

impl LinearOperator for Inpainting {
    type Output = f64;

    fn in_dim(&self) -> usize {
        self.complement.n_selected()
    }

    fn out_dim(&self) -> usize {
        self.mask.n_selected()
    }

    fn forward(&self, v: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * v[j]).sum())
            .collect()
    }

    fn adjoint(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.in_dim()];
        for (row, &pi) in self.weights.iter().zip(p) {
            for &(j, w) in row {
                out[j] += w * pi;
            }
        }
        out
    }
}

/// `M: R^N -> R^{N_M}`, pixel selection.
#[derive(Debug, Clone)]
pub struct MaskSelect(pub PixelMask);

impl LinearOperator for MaskSelect {
    type Output = f64;
    fn in_dim(&self) -> usize {
        self.0.grid_len()
    }
    fn out_dim(&self) -> usize {
        self.0.n_selected()
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.0.select(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.0.embed(y)
    }
}

/// `x -> M(x) - L(M^c(x))`.
#[derive(Debug, Clone)]
pub struct ResidualMap {
    inpaint: Arc<Inpainting>,
}

impl ResidualMap {
    pub fn new(mask: &PixelMask, inpaint: Arc<Inpainting>) -> Result<Self> {
        check_dim("residual map mask", inpaint.mask().n_selected(), mask.n_selected())?;
        if inpaint.mask() != mask {
            return Err(invalid("mask", "inpainting operator was built for another mask"));
        }
        Ok(Self { inpaint })
    }

    pub fn inpainting(&self) -> &Inpainting {
        &self.inpaint
    }
}

impl LinearOperator for ResidualMap {
    type Output = f64;

    fn in_dim(&self) -> usize {
        self.inpaint.mask().grid_len()
    }

    fn out_dim(&self) -> usize {
        self.inpaint.mask().n_selected()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let m = self.inpaint.mask().select(x);
        let l = self.inpaint.inpaint_image(x);
        m.iter().zip(l).map(|(a, b)| a - b).collect()
    }

    fn adjoint(&self, p: &[f64]) -> Vec<f64> {
        let mut out = self.inpaint.mask().embed(p);
        let lt = self.inpaint.adjoint(p);
        let neg: Vec<f64> = lt.iter().map(|v| -v).collect();
        self.inpaint.complement().embed_add(&neg, &mut out);
        out
    }
}
