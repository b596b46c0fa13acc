//! Dense row-major matrices, contiguous row-block partitions and the
//! per-block products the Kaczmarz iterations are built from.
//!
//! Row blocks are plain index ranges; the selector matrices that pick a
//! block out of a vector are never formed.

pub mod mtx;
pub mod svd;

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// Relative change of the Rayleigh quotient at which power iteration stops.
pub const POWER_ITERATION_TOL: f64 = 1e-12;
/// Iteration cap for power iteration.
pub const POWER_ITERATION_MAX_ITERS: usize = 10_000;

/// Dense `rows x cols` matrix stored row-major.
///
/// Every entry is finite and no row is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix must have at least one row and column"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        for i in 0..rows {
            if data[i * cols..(i + 1) * cols].iter().all(|v| v.is_zero()) {
                return Err(Error::ZeroRow(i));
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(m * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(m, n, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Self::new(n, n, data).expect("identity is a valid matrix")
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    /// Rows `start..end` as a contiguous row-major slice.
    #[inline]
    pub fn row_range(&self, start: usize, end: usize) -> &[T] {
        &self.data[start * self.cols..end * self.cols]
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[T], out: &mut [T]) {
        assert_eq!(x.len(), self.cols, "apply: x has wrong length");
        rows_apply(self.row_range(0, self.rows), self.cols, x, out);
    }

    pub fn apply_transpose(&self, r: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        self.apply_transpose_into(r, &mut out);
        out
    }

    pub fn apply_transpose_into(&self, r: &[T], out: &mut [T]) {
        assert_eq!(r.len(), self.rows, "apply_transpose: r has wrong length");
        out.iter_mut().for_each(|v| *v = T::zero());
        rows_apply_transpose_add(self.row_range(0, self.rows), self.cols, r, T::one(), out);
    }

    /// Column submatrix `A_J` in row-major order. Zero rows are allowed here,
    /// so the result is returned as raw data rather than a `DenseMatrix`.
    pub fn select_columns(&self, cols: &[usize]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            out.extend(cols.iter().map(|&j| row[j]));
        }
        out
    }

    pub fn frobenius_norm_sq(&self) -> T {
        scalar::norm_sq(&self.data)
    }

    /// All singular values, descending. Intended for small matrices.
    pub fn singular_values(&self) -> Result<Vec<T>> {
        svd::singular_values(self.rows, self.cols, &self.data)
    }
}

/// `out = B x` for a row-major block `B` with `cols` columns.
#[inline]
fn rows_apply<T: Scalar>(block: &[T], cols: usize, x: &[T], out: &mut [T]) {
    debug_assert_eq!(block.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(block.chunks_exact(cols)) {
        *o = scalar::dot(row, x);
    }
}

/// `out += scale * B^T r` for a row-major block `B` with `cols` columns.
#[inline]
fn rows_apply_transpose_add<T: Scalar>(block: &[T], cols: usize, r: &[T], scale: T, out: &mut [T]) {
    debug_assert_eq!(block.len(), r.len() * cols);
    for (&ri, row) in r.iter().zip(block.chunks_exact(cols)) {
        let c = scale * ri;
        if c.is_zero() {
            continue;
        }
        for (o, &a) in out.iter_mut().zip(row) {
            *o = *o + c * a;
        }
    }
}

/// Splits `rows` rows into `blocks` contiguous blocks; the first
/// `rows mod blocks` blocks get one extra row. Returns the `blocks + 1`
/// boundaries.
pub fn partition_rows(rows: usize, blocks: usize) -> Result<Vec<usize>> {
    if blocks < 1 || blocks > rows {
        return Err(Error::InvalidPartition { rows, blocks });
    }
    let base = rows / blocks;
    let extra = rows % blocks;
    let mut bounds = Vec::with_capacity(blocks + 1);
    bounds.push(0);
    let mut at = 0;
    for i in 0..blocks {
        at += base + usize::from(i < extra);
        bounds.push(at);
    }
    Ok(bounds)
}

/// Squared spectral norm of a row-major block by power iteration on `B^T B`.
///
/// Starts from the all-ones vector. If that start is annihilated by `B`,
/// restarts once from the block's first nonzero row, which always has a
/// positive Rayleigh quotient.
pub fn spectral_norm_sq<T: Scalar>(block: &[T], cols: usize) -> Result<T> {
    let rows = block.len() / cols;
    if rows == 0 || block.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: cols,
            got: block.len(),
        });
    }
    if rows == 1 {
        return Ok(scalar::norm_sq(block));
    }
    let ones = vec![T::one(); cols];
    match power_iterate(block, cols, ones)? {
        Some(l) => Ok(l),
        None => {
            let start = block
                .chunks_exact(cols)
                .find(|r| r.iter().any(|v| !v.is_zero()))
                .ok_or_else(|| Error::NumericalFailure("block is identically zero".into()))?
                .to_vec();
            power_iterate(block, cols, start)?
                .ok_or_else(|| Error::NumericalFailure("power iteration collapsed to zero".into()))
        }
    }
}

fn power_iterate<T: Scalar>(block: &[T], cols: usize, mut v: Vec<T>) -> Result<Option<T>> {
    let rows = block.len() / cols;
    let tol = T::lit(POWER_ITERATION_TOL);
    let mut w = vec![T::zero(); rows];
    let mut u = vec![T::zero(); cols];
    let nv = scalar::norm(&v);
    if nv.is_zero() {
        return Ok(None);
    }
    v.iter_mut().for_each(|x| *x = *x / nv);
    let mut prev = T::zero();
    for _ in 0..POWER_ITERATION_MAX_ITERS {
        rows_apply(block, cols, &v, &mut w);
        let lam = scalar::norm_sq(&w);
        if lam.is_zero() {
            return Ok(None);
        }
        if (lam - prev).abs() <= tol * lam {
            return Ok(Some(lam));
        }
        prev = lam;
        u.iter_mut().for_each(|x| *x = T::zero());
        rows_apply_transpose_add(block, cols, &w, T::one(), &mut u);
        let nu = scalar::norm(&u);
        for (vi, &ui) in v.iter_mut().zip(&u) {
            *vi = ui / nu;
        }
    }
    Err(Error::NumericalFailure(format!(
        "power iteration did not reach relative change {POWER_ITERATION_TOL:e} in {POWER_ITERATION_MAX_ITERS} iterations"
    )))
}

/// Per-block Lipschitz constants `L_i = ||A_(i)||_2^2`.
pub fn block_lipschitz<T: Scalar>(a: &DenseMatrix<T>, boundaries: &[usize]) -> Result<Vec<T>> {
    validate_boundaries(a.rows(), boundaries)?;
    boundaries
        .windows(2)
        .map(|w| spectral_norm_sq(a.row_range(w[0], w[1]), a.cols()))
        .collect()
}

fn validate_boundaries(rows: usize, boundaries: &[usize]) -> Result<()> {
    let blocks = boundaries.len().saturating_sub(1);
    let ok = boundaries.len() >= 2
        && boundaries[0] == 0
        && *boundaries.last().unwrap() == rows
        && boundaries.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidPartition { rows, blocks })
    }
}

/// Contiguous row blocks of a matrix together with their Lipschitz constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition<T> {
    boundaries: Vec<usize>,
    lipschitz: Vec<T>,
}

impl<T: Scalar> BlockPartition<T> {
    /// Equal-size partition of `a` into `blocks` blocks.
    pub fn equal(a: &DenseMatrix<T>, blocks: usize) -> Result<Self> {
        Self::from_boundaries(a, partition_rows(a.rows(), blocks)?)
    }

    pub fn from_boundaries(a: &DenseMatrix<T>, boundaries: Vec<usize>) -> Result<Self> {
        let lipschitz = block_lipschitz(a, &boundaries)?;
        Ok(Self { boundaries, lipschitz })
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.lipschitz.len()
    }

    #[inline]
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    #[inline]
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.boundaries[i]..self.boundaries[i + 1]
    }

    #[inline]
    pub fn block_len(&self, i: usize) -> usize {
        self.boundaries[i + 1] - self.boundaries[i]
    }

    #[inline]
    pub fn lipschitz(&self, i: usize) -> T {
        self.lipschitz[i]
    }

    #[inline]
    pub fn lipschitz_all(&self) -> &[T] {
        &self.lipschitz
    }

    pub fn l_max(&self) -> T {
        self.lipschitz.iter().copied().fold(T::zero(), T::max)
    }

    /// `(1/M) sum_j L_j^alpha`.
    pub fn mean_lipschitz_pow(&self, alpha: T) -> T {
        let s: T = self.lipschitz.iter().map(|l| l.powf(alpha)).sum();
        s / T::from_usize_lossy(self.num_blocks())
    }

    /// `A_(i) x`.
    pub fn block_apply(&self, a: &DenseMatrix<T>, i: usize, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.block_len(i)];
        self.block_apply_into(a, i, x, &mut out);
        out
    }

    pub fn block_apply_into(&self, a: &DenseMatrix<T>, i: usize, x: &[T], out: &mut [T]) {
        assert_eq!(x.len(), a.cols(), "block_apply: x has wrong length");
        assert_eq!(out.len(), self.block_len(i), "block_apply: output has wrong length");
        let r = self.range(i);
        rows_apply(a.row_range(r.start, r.end), a.cols(), x, out);
    }

    /// `A_(i)^T r`.
    pub fn block_apply_transpose(&self, a: &DenseMatrix<T>, i: usize, r: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); a.cols()];
        self.block_apply_transpose_add(a, i, r, T::one(), &mut out);
        out
    }

    /// `out += scale * A_(i)^T r`.
    pub fn block_apply_transpose_add(&self, a: &DenseMatrix<T>, i: usize, r: &[T], scale: T, out: &mut [T]) {
        assert_eq!(r.len(), self.block_len(i), "block_apply_transpose: r has wrong length");
        assert_eq!(out.len(), a.cols(), "block_apply_transpose: output has wrong length");
        let range = self.range(i);
        rows_apply_transpose_add(a.row_range(range.start, range.end), a.cols(), r, scale, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition_rows(6, 3).unwrap(), vec![0, 2, 4, 6]);
        assert_eq!(partition_rows(7, 3).unwrap(), vec![0, 3, 5, 7]);
        assert_eq!(partition_rows(5, 5).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert!(matches!(partition_rows(3, 4), Err(Error::InvalidPartition { .. })));
        assert!(matches!(partition_rows(3, 0), Err(Error::InvalidPartition { .. })));
    }

    #[test]
    fn lipschitz_examples() {
        let a = m(&[&[3.0, 4.0]]);
        assert_eq!(block_lipschitz(&a, &[0, 1]).unwrap(), vec![25.0]);

        let id = DenseMatrix::<f64>::identity(2);
        let l = block_lipschitz(&id, &[0, 2]).unwrap();
        assert!((l[0] - 1.0).abs() < 1e-12);

        // A^T A = [[2,0],[0,0]]
        let a = m(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let l = block_lipschitz(&a, &[0, 2]).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_when_ones_vector_is_annihilated() {
        // both rows orthogonal to (1,1): the ones start gives zero
        let a = m(&[&[1.0, -1.0], &[2.0, -2.0]]);
        let l = block_lipschitz(&a, &[0, 2]).unwrap();
        assert!((l[0] - 10.0).abs() < 1e-10);
    }

    #[test]
    fn block_products() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 2.0], &[3.0, 4.0]]);
        let p = BlockPartition::from_boundaries(&a, vec![0, 2, 4]).unwrap();
        assert_eq!(p.block_apply(&a, 0, &[1.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(p.block_apply(&a, 0, &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(p.block_apply(&a, 1, &[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(p.block_apply_transpose(&a, 0, &[1.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(p.block_apply_transpose(&a, 0, &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(p.block_apply_transpose(&a, 1, &[1.0, 1.0]), vec![4.0, 6.0]);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]),
            Err(Error::ZeroRow(1))
        ));
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn bad_boundaries_rejected() {
        let a = DenseMatrix::<f64>::identity(3);
        assert!(BlockPartition::from_boundaries(&a, vec![0, 2]).is_err());
        assert!(BlockPartition::from_boundaries(&a, vec![0, 2, 2, 3]).is_err());
        assert!(BlockPartition::from_boundaries(&a, vec![1, 3]).is_err());
    }

    #[test]
    fn lipschitz_summaries() {
        let a = m(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let p = BlockPartition::equal(&a, 2).unwrap();
        assert_eq!(p.lipschitz_all(), &[4.0, 1.0]);
        assert_eq!(p.l_max(), 4.0);
        assert!((p.mean_lipschitz_pow(1.0) - 2.5).abs() < 1e-15);
        assert!((p.mean_lipschitz_pow(0.0) - 1.0).abs() < 1e-15);
    }
}
