//! Orthonormal separable Daubechies-8 wavelet analysis with periodic
//! boundary handling.

use super::LinearOperator;
use crate::error::{invalid, Result};

/// Db8 scaling (low-pass) filter, 16 taps, normalised so that the taps sum to
/// `sqrt(2)` and have unit energy.
pub const DB8_LOWPASS: [f64; 16] = [
    0.054_415_842_243_104_01,
    0.312_871_590_914_299_95,
    0.675_630_736_297_289_8,
    0.585_354_683_654_206_7,
    -0.015_829_105_256_349_306,
    -0.284_015_542_961_546_9,
    0.000_472_484_573_913_282_8,
    0.128_747_426_620_478_47,
    -0.017_369_301_001_807_547,
    -0.044_088_253_930_794_755,
    0.013_981_027_917_398_282,
    0.008_746_094_047_405_777,
    -0.004_870_352_993_451_574,
    -0.000_391_740_373_376_947_05,
    0.000_675_449_406_450_569_3,
    -0.000_117_476_784_124_769_53,
];

/// Multi-level 2-D Db8 analysis `Psi: R^N -> R^N` in the usual Mallat layout
/// (approximation block in the top-left corner).
#[derive(Debug, Clone)]
pub struct Db8Wavelet {
    rows: usize,
    cols: usize,
    levels: usize,
    lo: [f64; 16],
    hi: [f64; 16],
}

impl Db8Wavelet {
    pub fn new(rows: usize, cols: usize, levels: usize) -> Result<Self> {
        let div = 1usize << levels;
        if rows == 0 || cols == 0 || rows % div != 0 || cols % div != 0 {
            return Err(invalid(
                "levels",
                format!("image dimensions {rows}x{cols} are not divisible by 2^{levels}"),
            ));
        }
        let lo = DB8_LOWPASS;
        let mut hi = [0.0; 16];
        for k in 0..16 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            hi[k] = sign * lo[15 - k];
        }
        Ok(Self {
            rows,
            cols,
            levels,
            lo,
            hi,
        })
    }

    /// Largest level count `<= cap` compatible with the image dimensions.
    pub fn max_levels(rows: usize, cols: usize, cap: usize) -> usize {
        let mut levels = 0;
        while levels < cap && rows % (1 << (levels + 1)) == 0 && cols % (1 << (levels + 1)) == 0 {
            levels += 1;
        }
        levels
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    fn analyse_1d(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let half = n / 2;
        // Outputs whose window does not wrap around.
        let interior = if n >= 16 { (n - 16) / 2 + 1 } else { 0 };
        for i in 0..interior {
            let w = &x[2 * i..2 * i + 16];
            let (mut a, mut d) = (0.0, 0.0);
            for k in 0..16 {
                a += self.lo[k] * w[k];
                d += self.hi[k] * w[k];
            }
            out[i] = a;
            out[half + i] = d;
        }
        for i in interior..half {
            let (mut a, mut d) = (0.0, 0.0);
            for k in 0..16 {
                let v = x[(2 * i + k) % n];
                a += self.lo[k] * v;
                d += self.hi[k] * v;
            }
            out[i] = a;
            out[half + i] = d;
        }
    }

    fn synthesise_1d(&self, c: &[f64], out: &mut [f64]) {
        let n = c.len();
        let half = n / 2;
        out.iter_mut().for_each(|v| *v = 0.0);
        let interior = if n >= 16 { (n - 16) / 2 + 1 } else { 0 };
        for i in 0..interior {
            let (a, d) = (c[i], c[half + i]);
            let w = &mut out[2 * i..2 * i + 16];
            for k in 0..16 {
                w[k] += self.lo[k] * a + self.hi[k] * d;
            }
        }
        for i in interior..half {
            let (a, d) = (c[i], c[half + i]);
            for k in 0..16 {
                out[(2 * i + k) % n] += self.lo[k] * a + self.hi[k] * d;
            }
        }
    }

    /// Applies `f` to every row (length `c`) then every column (length `r`)
    /// of the top-left `r x c` block.
    fn separable(&self, data: &mut [f64], r: usize, c: usize, inverse: bool) {
        let stride = self.cols;
        let mut inp = vec![0.0; r.max(c)];
        let mut out = vec![0.0; r.max(c)];
        let mut pass_rows = |data: &mut [f64]| {
            for row in 0..r {
                inp[..c].copy_from_slice(&data[row * stride..row * stride + c]);
                if inverse {
                    self.synthesise_1d(&inp[..c], &mut out[..c]);
                } else {
                    self.analyse_1d(&inp[..c], &mut out[..c]);
                }
                data[row * stride..row * stride + c].copy_from_slice(&out[..c]);
            }
        };
        let mut colin = vec![0.0; r];
        let mut colout = vec![0.0; r];
        let mut pass_cols = |data: &mut [f64]| {
            for col in 0..c {
                for row in 0..r {
                    colin[row] = data[row * stride + col];
                }
                if inverse {
                    self.synthesise_1d(&colin, &mut colout);
                } else {
                    self.analyse_1d(&colin, &mut colout);
                }
                for row in 0..r {
                    data[row * stride + col] = colout[row];
                }
            }
        };
        if inverse {
            pass_cols(data);
            pass_rows(data);
        } else {
            pass_rows(data);
            pass_cols(data);
        }
    }
}

impl LinearOperator for Db8Wavelet {
    type Output = f64;

    fn in_dim(&self) -> usize {
        self.rows * self.cols
    }

    fn out_dim(&self) -> usize {
        self.rows * self.cols
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut data = x.to_vec();
        for level in 0..self.levels {
            self.separable(&mut data, self.rows >> level, self.cols >> level, false);
        }
        data
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut data = y.to_vec();
        for level in (0..self.levels).rev() {
            self.separable(&mut data, self.rows >> level, self.cols >> level, true);
        }
        data
    }
}
