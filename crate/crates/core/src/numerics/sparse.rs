use alloc::vec;
use alloc::vec::Vec;

use super::{ComplexMatrix, NumericsError, C64};

/// Compressed sparse row complex matrix.
///
/// Grid operators (position, finite-difference stencils, kinetic energy and
/// the localization operator) are all banded, so every product against a
/// dense density matrix costs `O(N^2 * bandwidth)` instead of `O(N^3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, C64)]) -> Self {
        let mut per_row: Vec<Vec<(usize, C64)>> = vec![Vec::new(); rows];
        for &(i, j, v) in triplets {
            assert!(i < rows && j < cols, "triplet ({i}, {j}) outside {rows}x{cols}");
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut entries in per_row {
            entries.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < entries.len() {
                let j = entries[k].0;
                let mut sum = C64::new(0.0, 0.0);
                while k < entries.len() && entries[k].0 == j {
                    sum += entries[k].1;
                    k += 1;
                }
                if sum != C64::new(0.0, 0.0) {
                    col_idx.push(j);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { rows, cols, row_ptr, col_idx, values }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, &[])
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), d.len(), &t)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        (0..self.rows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn adjoint(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.cols, self.rows, &t)
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, NumericsError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumericsError::DimensionMismatch { expected: self.rows * self.cols, found: other.rows * other.cols });
        }
        let mut t = self.triplets();
        t.extend(other.triplets());
        Ok(Self::from_triplets(self.rows, self.cols, &t))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut t = Vec::new();
        for i in 0..self.rows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    t.push((i, j, a * b));
                }
            }
        }
        Ok(Self::from_triplets(self.rows, other.cols, &t))
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// `out = self * v`
    pub fn mul_vec_into(&self, v: &[C64], out: &mut [C64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * v[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>, NumericsError> {
        if v.len() != self.cols {
            return Err(NumericsError::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        self.mul_vec_into(v, &mut out);
        Ok(out)
    }

    /// `self * m` for a dense `m`.
    pub fn mul_dense(&self, m: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
        if self.cols != m.rows() {
            return Err(NumericsError::DimensionMismatch { expected: self.cols, found: m.rows() });
        }
        let n = m.cols();
        let mut out = ComplexMatrix::zeros(self.rows, n);
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for i in 0..self.rows {
            let out_row = &mut dst[i * n..(i + 1) * n];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[k];
                let j = self.col_idx[k];
                for (o, b) in out_row.iter_mut().zip(&src[j * n..(j + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `dst = self * src` where `src` and `dst` are row-major with `ncols`
    /// columns.
    pub fn mul_dense_slice(&self, src: &[C64], ncols: usize, dst: &mut [C64]) {
        debug_assert_eq!(src.len(), self.cols * ncols);
        debug_assert_eq!(dst.len(), self.rows * ncols);
        for i in 0..self.rows {
            let out_row = &mut dst[i * ncols..(i + 1) * ncols];
            out_row.fill(C64::new(0.0, 0.0));
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[k];
                let j = self.col_idx[k];
                for (o, b) in out_row.iter_mut().zip(&src[j * ncols..(j + 1) * ncols]) {
                    *o += a * b;
                }
            }
        }
    }

    /// `dst = src * self^dagger` where `src` and `dst` are row-major with
    /// `self.cols` and `self.rows` columns respectively.
    pub fn mul_adjoint_right_slice(&self, src: &[C64], nrows: usize, dst: &mut [C64]) {
        debug_assert_eq!(src.len(), nrows * self.cols);
        debug_assert_eq!(dst.len(), nrows * self.rows);
        for r in 0..nrows {
            let s_row = &src[r * self.cols..(r + 1) * self.cols];
            let d_row = &mut dst[r * self.rows..(r + 1) * self.rows];
            for (j, d) in d_row.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                    acc += s_row[self.col_idx[k]] * self.values[k].conj();
                }
                *d = acc;
            }
        }
    }

    /// `<v|self|v>` with a plain (unweighted) inner product.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            let mut row = C64::new(0.0, 0.0);
            for (j, a) in self.row(i) {
                row += a * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc
    }

    /// Largest `|i - j|` over stored entries, ignoring periodic wrap.
    pub fn max_offset(&self) -> usize {
        self.triplets().iter().map(|&(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> SparseMatrix {
        SparseMatrix::from_triplets(3, 3, &[(0, 0, c(1.0, 0.0)), (0, 2, c(0.0, 2.0)), (1, 1, c(-1.0, 0.5)), (2, 0, c(3.0, 0.0)), (2, 0, c(1.0, 0.0))])
    }

    #[test]
    fn duplicates_are_summed() {
        let s = sample();
        assert_eq!(s.nnz(), 4);
        assert_eq!(s.to_dense()[(2, 0)], c(4.0, 0.0));
    }

    #[test]
    fn products_agree_with_dense() {
        let s = sample();
        let d = s.to_dense();
        let m = ComplexMatrix::from_fn(3, 3, |i, j| c(i as f64 - j as f64, 0.1 * (i + j) as f64));
        let sparse = s.mul_dense(&m).unwrap();
        let dense = d.matmul(&m).unwrap();
        assert!(sparse.sub(&dense).unwrap().frobenius_norm() < 1e-14);

        let ss = s.matmul(&s.adjoint()).unwrap().to_dense();
        let dd = d.matmul(&d.adjoint()).unwrap();
        assert!(ss.sub(&dd).unwrap().frobenius_norm() < 1e-14);

        let mut right = vec![c(0.0, 0.0); 9];
        s.mul_adjoint_right_slice(m.as_slice(), 3, &mut right);
        let expect = m.matmul(&d.adjoint()).unwrap();
        for (a, b) in right.iter().zip(expect.as_slice()) {
            assert!((a - b).norm() < 1e-14);
        }

        let v = [c(1.0, -1.0), c(0.5, 0.0), c(0.0, 2.0)];
        let sv = s.mul_vec(&v).unwrap();
        let dv = d.mul_vec(&v).unwrap();
        for (a, b) in sv.iter().zip(&dv) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let s = sample();
        assert!(s.mul_vec(&[c(1.0, 0.0)]).is_err());
        assert!(s.matmul(&SparseMatrix::zeros(2, 2)).is_err());
    }
}
