//! Masked unitary 2-D DFT and its multi-coil extension.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::LinearOperator;
use crate::error::{check_dim, invalid, BuqoError, Result};

/// Selected frequencies on a `rows x cols` discrete grid, stored as sorted
/// linear indices `u * cols + v` in FFT order (index 0 is the DC term).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPattern {
    rows: usize,
    cols: usize,
    indices: Vec<usize>,
}

impl SamplingPattern {
    pub fn new(rows: usize, cols: usize, mut indices: Vec<usize>) -> Result<Self> {
        let n = rows * cols;
        if n == 0 {
            return Err(invalid("rows/cols", "frequency grid must be non-empty"));
        }
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(BuqoError::IndexOutOfRange { index: bad, len: n });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("indices", "duplicate frequency index"));
        }
        Ok(Self {
            rows,
            cols,
            indices,
        })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indices: (0..rows * cols).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of selected frequencies.
    pub fn n_selected(&self) -> usize {
        self.indices.len()
    }

    /// Signed frequency `(ku, kv)` of a linear index, in `[-n/2, n/2)`.
    pub fn signed_frequency(&self, index: usize) -> (i64, i64) {
        let (u, v) = ((index / self.cols) as i64, (index % self.cols) as i64);
        let wrap = |k: i64, n: i64| if k >= (n + 1) / 2 { k - n } else { k };
        (wrap(u, self.rows as i64), wrap(v, self.cols as i64))
    }
}

#[derive(Clone)]
struct Plans {
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }
}

/// Unitary 2-D DFT followed by frequency selection.
#[derive(Clone)]
pub struct MaskedDft {
    pattern: SamplingPattern,
    plans: Plans,
    scale: f64,
}

impl fmt::Debug for MaskedDft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaskedDft")
            .field("rows", &self.pattern.rows)
            .field("cols", &self.pattern.cols)
            .field("n_selected", &self.pattern.n_selected())
            .finish()
    }
}

impl MaskedDft {
    pub fn new(pattern: SamplingPattern) -> Result<Self> {
        if pattern.indices.is_empty() {
            return Err(invalid("pattern", "sampling pattern selects no frequency"));
        }
        let plans = Plans::new(pattern.rows, pattern.cols);
        let scale = 1.0 / ((pattern.rows * pattern.cols) as f64).sqrt();
        Ok(Self {
            pattern,
            plans,
            scale,
        })
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let (rows, cols) = (self.pattern.rows, self.pattern.cols);
        let (row_plan, col_plan) = if inverse {
            (&self.plans.row_inv, &self.plans.col_inv)
        } else {
            (&self.plans.row_fwd, &self.plans.col_fwd)
        };
        row_plan.process(buf);
        let mut column = vec![Complex64::default(); rows];
        for c in 0..cols {
            for r in 0..rows {
                column[r] = buf[r * cols + c];
            }
            col_plan.process(&mut column);
            for r in 0..rows {
                buf[r * cols + c] = column[r];
            }
        }
    }

    /// Full unitary spectrum of a real image.
    pub fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf.iter_mut().for_each(|z| *z *= self.scale);
        buf
    }
}

impl LinearOperator for MaskedDft {
    type Output = Complex64;

    fn in_dim(&self) -> usize {
        self.pattern.rows * self.pattern.cols
    }

    fn out_dim(&self) -> usize {
        self.pattern.n_selected()
    }

    fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let spec = self.spectrum(x);
        self.pattern.indices.iter().map(|&i| spec[i]).collect()
    }

    fn adjoint(&self, y: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![Complex64::default(); self.in_dim()];
        for (&i, &v) in self.pattern.indices.iter().zip(y) {
            buf[i] = v;
        }
        self.transform(&mut buf, true);
        buf.iter().map(|z| z.re * self.scale).collect()
    }
}

/// Stacked per-coil masked DFTs of `s_c * x`.
#[derive(Debug, Clone)]
pub struct MultiCoil {
    coils: Vec<(MaskedDft, Vec<f64>)>,
    n: usize,
    m: usize,
}

impl MultiCoil {
    pub fn new(patterns: Vec<SamplingPattern>, sensitivities: Vec<Vec<f64>>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(invalid("patterns", "at least one coil is required"));
        }
        check_dim("coil sensitivities", patterns.len(), sensitivities.len())?;
        let (rows, cols) = (patterns[0].rows, patterns[0].cols);
        let mut coils = Vec::with_capacity(patterns.len());
        let mut m = 0;
        for (p, s) in patterns.into_iter().zip(sensitivities) {
            if p.rows != rows || p.cols != cols {
                return Err(invalid("patterns", "all coils must share the image grid"));
            }
            check_dim("sensitivity profile", rows * cols, s.len())?;
            m += p.n_selected();
            coils.push((MaskedDft::new(p)?, s));
        }
        Ok(Self {
            coils,
            n: rows * cols,
            m,
        })
    }

    pub fn n_coils(&self) -> usize {
        self.coils.len()
    }
}

impl LinearOperator for MultiCoil {
    type Output = Complex64;

    fn in_dim(&self) -> usize {
        self.n
    }

    fn out_dim(&self) -> usize {
        self.m
    }

    fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.m);
        for (dft, s) in &self.coils {
            let weighted: Vec<f64> = x.iter().zip(s).map(|(a, b)| a * b).collect();
            out.extend(dft.forward(&weighted));
        }
        out
    }

    fn adjoint(&self, y: &[Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        let mut offset = 0;
        for (dft, s) in &self.coils {
            let len = dft.out_dim();
            let back = dft.adjoint(&y[offset..offset + len]);
            for ((o, b), w) in out.iter_mut().zip(back).zip(s) {
                *o += w * b;
            }
            offset += len;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::adjoint_mismatch;
    use crate::scalar::distance;

    #[test]
    fn impulse_has_flat_spectrum() {
        let (rows, cols) = (4, 8);
        let dft = MaskedDft::new(SamplingPattern::full(rows, cols)).unwrap();
        let mut x = vec![0.0; rows * cols];
        x[0] = 1.0;
        let expected = 1.0 / ((rows * cols) as f64).sqrt();
        for z in dft.forward(&x) {
            assert!((z.re - expected).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn full_grid_is_unitary() {
        let dft = MaskedDft::new(SamplingPattern::full(6, 4)).unwrap();
        let x: Vec<f64> = (0..24).map(|i| ((i * 7 % 5) as f64).sin()).collect();
        let back = dft.adjoint(&dft.forward(&x));
        assert!(distance(&back, &x) < 1e-12);
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(SamplingPattern::new(2, 2, vec![4]).is_err());
        assert!(SamplingPattern::new(2, 2, vec![1, 1]).is_err());
        assert!(MaskedDft::new(SamplingPattern::new(2, 2, vec![]).unwrap()).is_err());
    }

    #[test]
    fn signed_frequencies_wrap() {
        let p = SamplingPattern::full(4, 5);
        assert_eq!(p.signed_frequency(0), (0, 0));
        assert_eq!(p.signed_frequency(3 * 5 + 4), (-1, -1));
        assert_eq!(p.signed_frequency(2 * 5 + 2), (-2, 2));
    }

    #[test]
    fn single_unit_coil_matches_masked_dft() {
        let p = SamplingPattern::new(4, 4, vec![0, 3, 5, 9, 14]).unwrap();
        let dft = MaskedDft::new(p.clone()).unwrap();
        let mc = MultiCoil::new(vec![p.clone()], vec![vec![1.0; 16]]).unwrap();
        let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).cos()).collect();
        assert_eq!(mc.forward(&x), dft.forward(&x));
        let two = MultiCoil::new(vec![p.clone(), p], vec![vec![1.0; 16]; 2]).unwrap();
        let y2 = two.forward(&x);
        let y1 = dft.forward(&x);
        assert_eq!(&y2[..5], &y1[..]);
        assert_eq!(&y2[5..], &y1[..]);
        let v: Vec<Complex64> = (0..10).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        assert!(adjoint_mismatch(&two, &x, &v) < 1e-13);
    }

    #[test]
    fn multicoil_dimension_checks() {
        let p = SamplingPattern::full(2, 2);
        assert!(MultiCoil::new(vec![p.clone()], vec![vec![1.0; 3]]).is_err());
        assert!(MultiCoil::new(vec![p.clone(), p], vec![vec![1.0; 4]]).is_err());
        let q = SamplingPattern::full(2, 3);
        assert!(MultiCoil::new(vec![SamplingPattern::full(2, 2), q], vec![vec![1.0; 4], vec![1.0; 6]]).is_err());
    }
}
