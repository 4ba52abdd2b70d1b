//! Block-sparse and dense complex matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cmat_adjoint, cmat_mul};

/// Largest total dimension accepted by [`BlockComplexMatrix::to_dense`].
pub const DENSE_CAP: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sparse matrix of d×d complex blocks, stored as a row-major sorted
/// coordinate list with unique positions.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockComplexMatrix {
    block_rows: usize,
    block_cols: usize,
    d: usize,
    entries: Vec<(usize, usize, Vec<Complex64>)>,
}

/// Accumulates blocks in any order; duplicates are summed at [`finish`](Self::finish).
#[derive(Debug, Clone)]
pub struct BlockBuilder {
    block_rows: usize,
    block_cols: usize,
    d: usize,
    pending: Vec<(usize, usize, Vec<Complex64>)>,
}

impl BlockBuilder {
    pub fn new(block_rows: usize, block_cols: usize, d: usize) -> Self {
        BlockBuilder {
            block_rows,
            block_cols,
            d,
            pending: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, block: Vec<Complex64>) {
        debug_assert!(row < self.block_rows && col < self.block_cols);
        debug_assert_eq!(block.len(), self.d * self.d);
        self.pending.push((row, col, block));
    }

    /// Merges another builder's blocks (e.g. a per-hyperedge buffer).
    pub fn extend(&mut self, other: BlockBuilder) {
        self.pending.extend(other.pending);
    }

    pub fn finish(mut self) -> BlockComplexMatrix {
        // stable sort keeps the push order within a position, so sums are
        // reproducible for a fixed assembly order
        self.pending.sort_by_key(|(r, c, _)| (*r, *c));
        let mut entries: Vec<(usize, usize, Vec<Complex64>)> = Vec::with_capacity(self.pending.len());
        for (r, c, b) in self.pending {
            match entries.last_mut() {
                Some((lr, lc, acc)) if *lr == r && *lc == c => {
                    acc.iter_mut().zip(&b).for_each(|(a, x)| *a += x);
                }
                _ => entries.push((r, c, b)),
            }
        }
        BlockComplexMatrix {
            block_rows: self.block_rows,
            block_cols: self.block_cols,
            d: self.d,
            entries,
        }
    }
}

impl BlockComplexMatrix {
    pub fn zeros(block_rows: usize, block_cols: usize, d: usize) -> Self {
        BlockBuilder::new(block_rows, block_cols, d).finish()
    }

    /// Block-diagonal matrix from real d×d blocks.
    pub fn block_diagonal(blocks: &[Vec<f64>], d: usize) -> Self {
        let mut b = BlockBuilder::new(blocks.len(), blocks.len(), d);
        for (i, blk) in blocks.iter().enumerate() {
            b.push(i, i, blk.iter().map(|&x| Complex64::new(x, 0.0)).collect());
        }
        b.finish()
    }

    pub fn identity(n: usize, d: usize) -> Self {
        let mut id = vec![0.0; d * d];
        (0..d).for_each(|i| id[i * d + i] = 1.0);
        Self::block_diagonal(&vec![id; n], d)
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn block_dim(&self) -> usize {
        self.d
    }

    pub fn nnz_blocks(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Vec<Complex64>)] {
        &self.entries
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&[Complex64]> {
        self.entries
            .binary_search_by_key(&(row, col), |(r, c, _)| (*r, *c))
            .ok()
            .map(|i| self.entries[i].2.as_slice())
    }

    /// Block `(row, col)`, zero when not stored.
    pub fn block_or_zero(&self, row: usize, col: usize) -> Vec<Complex64> {
        self.block(row, col)
            .map(<[_]>::to_vec)
            .unwrap_or_else(|| vec![ZERO; self.d * self.d])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut b = BlockBuilder::new(self.block_cols, self.block_rows, self.d);
        for (r, c, blk) in &self.entries {
            b.push(*c, *r, cmat_adjoint(blk, self.d));
        }
        b.finish()
    }

    /// Block product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.block_cols != other.block_rows || self.d != other.d {
            return Err(Error::Dimension {
                expected: self.block_cols,
                found: other.block_rows,
            });
        }
        let mut row_start = vec![0usize; other.block_rows + 1];
        for (r, _, _) in &other.entries {
            row_start[r + 1] += 1;
        }
        for i in 0..other.block_rows {
            row_start[i + 1] += row_start[i];
        }
        let mut b = BlockBuilder::new(self.block_rows, other.block_cols, self.d);
        for (i, k, a) in &self.entries {
            for (_, j, bb) in &other.entries[row_start[*k]..row_start[*k + 1]] {
                b.push(*i, *j, cmat_mul(a, bb, self.d));
            }
        }
        Ok(b.finish())
    }

    /// `self + alpha · other`.
    pub fn add_scaled(&self, other: &Self, alpha: f64) -> Result<Self> {
        if self.block_rows != other.block_rows || self.block_cols != other.block_cols || self.d != other.d {
            return Err(Error::Dimension {
                expected: self.block_rows,
                found: other.block_rows,
            });
        }
        let mut b = BlockBuilder::new(self.block_rows, self.block_cols, self.d);
        for (r, c, blk) in &self.entries {
            b.push(*r, *c, blk.clone());
        }
        for (r, c, blk) in &other.entries {
            b.push(*r, *c, blk.iter().map(|z| z * alpha).collect());
        }
        Ok(b.finish())
    }

    /// `left_i · block_ij · right_j` with real block-diagonal factors.
    pub fn scale_blocks(&self, left: &[Vec<f64>], right: &[Vec<f64>]) -> Self {
        let d = self.d;
        let entries = self
            .entries
            .iter()
            .map(|(r, c, blk)| {
                let l: Vec<Complex64> = left[*r].iter().map(|&x| Complex64::new(x, 0.0)).collect();
                let rr: Vec<Complex64> = right[*c].iter().map(|&x| Complex64::new(x, 0.0)).collect();
                (*r, *c, cmat_mul(&cmat_mul(&l, blk, d), &rr, d))
            })
            .collect();
        BlockComplexMatrix {
            block_rows: self.block_rows,
            block_cols: self.block_cols,
            d,
            entries,
        }
    }

    /// Product with a row-major `(block_cols·d) × cols` signal.
    pub fn apply(&self, x: &[Complex64], cols: usize) -> Result<Vec<Complex64>> {
        let d = self.d;
        if x.len() != self.block_cols * d * cols {
            return Err(Error::Dimension {
                expected: self.block_cols * d * cols,
                found: x.len(),
            });
        }
        let mut y = vec![ZERO; self.block_rows * d * cols];
        for (r, c, blk) in &self.entries {
            for i in 0..d {
                let yrow = &mut y[(r * d + i) * cols..(r * d + i + 1) * cols];
                for k in 0..d {
                    let a = blk[i * d + k];
                    let xrow = &x[(c * d + k) * cols..(c * d + k + 1) * cols];
                    yrow.iter_mut().zip(xrow).for_each(|(yv, xv)| *yv += a * xv);
                }
            }
        }
        Ok(y)
    }

    pub fn to_dense(&self) -> Result<DenseComplex> {
        let rows = self.block_rows * self.d;
        let cols = self.block_cols * self.d;
        if rows.max(cols) > DENSE_CAP {
            return Err(Error::DenseTooLarge {
                dim: rows.max(cols),
                cap: DENSE_CAP,
            });
        }
        let d = self.d;
        let mut m = DenseComplex::zeros(rows, cols);
        for (r, c, blk) in &self.entries {
            for i in 0..d {
                for j in 0..d {
                    m.data[(r * d + i) * cols + c * d + j] = blk[i * d + j];
                }
            }
        }
        Ok(m)
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseComplex {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl DenseComplex {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseComplex {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        (0..n).for_each(|i| m.data[i * n + i] = Complex64::new(1.0, 0.0));
        m
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        DenseComplex {
            rows,
            cols,
            data: data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.cols + j] = z;
    }

    /// max |M - M†| over all entries.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        DenseComplex {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        DenseComplex {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `M ⊗ I_d`.
    pub fn kron_identity(&self, d: usize) -> Self {
        let mut out = Self::zeros(self.rows * d, self.cols * d);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for k in 0..d {
                    out.set(i * d + k, j * d + k, self.get(i, j));
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }
}
