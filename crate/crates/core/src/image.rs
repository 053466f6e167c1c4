//! Pixel grids and pixel-index masks.

use crate::error::{check_dim, invalid, BuqoError, Result};
use crate::scalar;

/// A real-valued image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("rows/cols", "image must have at least one pixel"));
        }
        check_dim("image data", rows * cols, data.len())?;
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(BuqoError::NonFinite(pos));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty image");
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty image");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of pixels `N`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Same dimensions, new pixel values.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.rows, self.cols, data)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn norm(&self) -> f64 {
        scalar::norm(&self.data)
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

/// A sorted set of pixel positions on a `rows x cols` grid.
///
/// Used as the selection operator `M` (and, through [`PixelMask::complement`],
/// as `M^c`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    rows: usize,
    cols: usize,
    indices: Vec<usize>,
}

impl PixelMask {
    /// Builds a mask from arbitrary-order indices. Duplicates are rejected.
    pub fn new(rows: usize, cols: usize, mut indices: Vec<usize>) -> Result<Self> {
        let n = rows * cols;
        if n == 0 {
            return Err(invalid("rows/cols", "mask grid must be non-empty"));
        }
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(BuqoError::IndexOutOfRange { index: bad, len: n });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("indices", "duplicate pixel index"));
        }
        Ok(Self {
            rows,
            cols,
            indices,
        })
    }

    pub fn from_predicate(rows: usize, cols: usize, mut pred: impl FnMut(usize, usize) -> bool) -> Self {
        let mut indices = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if pred(r, c) {
                    indices.push(r * cols + c);
                }
            }
        }
        Self {
            rows,
            cols,
            indices,
        }
    }

    /// Discrete disk `{p : ||p - center||_2 <= radius}` clipped to the grid.
    pub fn disk(rows: usize, cols: usize, center: (usize, usize), radius: f64) -> Self {
        let (cr, cc) = (center.0 as f64, center.1 as f64);
        Self::from_predicate(rows, cols, |r, c| {
            let (dr, dc) = (r as f64 - cr, c as f64 - cc);
            dr * dr + dc * dc <= radius * radius
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of pixels of the underlying grid.
    pub fn grid_len(&self) -> usize {
        self.rows * self.cols
    }

    /// `N_M`
    pub fn n_selected(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn complement(&self) -> PixelMask {
        let mut out = Vec::with_capacity(self.grid_len() - self.indices.len());
        let mut it = self.indices.iter().peekable();
        for i in 0..self.grid_len() {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        PixelMask {
            rows: self.rows,
            cols: self.cols,
            indices: out,
        }
    }

    /// `M(x)`
    pub fn select(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.grid_len());
        self.indices.iter().map(|&i| x[i]).collect()
    }

    /// `M^T(v)`: zero-filled embedding into the full grid.
    pub fn embed(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid_len()];
        self.embed_add(v, &mut out);
        out
    }

    /// `out += M^T(v)`
    pub fn embed_add(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.indices.len());
        for (&i, &vi) in self.indices.iter().zip(v) {
            out[i] += vi;
        }
    }

    /// Morphological dilation by the discrete disk of the given radius.
    pub fn dilate(&self, radius: usize) -> PixelMask {
        let r = radius as isize;
        let offsets: Vec<(isize, isize)> = (-r..=r)
            .flat_map(|dr| (-r..=r).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| dr * dr + dc * dc <= r * r)
            .collect();
        let mut hit = vec![false; self.grid_len()];
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        for &i in &self.indices {
            let (pr, pc) = ((i / self.cols) as isize, (i % self.cols) as isize);
            for &(dr, dc) in &offsets {
                let (qr, qc) = (pr + dr, pc + dc);
                if qr >= 0 && qr < rows && qc >= 0 && qc < cols {
                    hit[(qr * cols + qc) as usize] = true;
                }
            }
        }
        PixelMask {
            rows: self.rows,
            cols: self.cols,
            indices: (0..hit.len()).filter(|&i| hit[i]).collect(),
        }
    }
}
