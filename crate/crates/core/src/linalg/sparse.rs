//! Compressed sparse row matrices.

use serde::{Deserialize, Serialize};

use super::{norm2, LinalgError};

/// A real matrix in compressed sparse row form.
///
/// Column indices are strictly increasing inside each row and no explicit
/// zeros are stored. All constructors enforce these invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CsrWire", into = "CsrWire")]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

/// Serialized layout: `{rows, cols, nnz, row_ptr, col_idx, vals}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CsrWire {
    rows: usize,
    cols: usize,
    nnz: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl TryFrom<CsrWire> for SparseMatrix {
    type Error = LinalgError;

    fn try_from(w: CsrWire) -> Result<Self, Self::Error> {
        if w.nnz != w.vals.len() {
            return Err(LinalgError::InvalidCsr(format!(
                "nnz = {} but {} values stored",
                w.nnz,
                w.vals.len()
            )));
        }
        SparseMatrix::from_csr(w.rows, w.cols, w.row_ptr, w.col_idx, w.vals)
    }
}

impl From<SparseMatrix> for CsrWire {
    fn from(m: SparseMatrix) -> Self {
        CsrWire {
            rows: m.n_rows,
            cols: m.n_cols,
            nnz: m.vals.len(),
            row_ptr: m.row_ptr,
            col_idx: m.col_idx,
            vals: m.vals,
        }
    }
}

impl SparseMatrix {
    /// An `n_rows x n_cols` matrix with no stored entries.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    /// Builds a matrix from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        let bad = |msg: String| Err(LinalgError::InvalidCsr(msg));
        if row_ptr.len() != n_rows + 1 {
            return bad(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                n_rows + 1
            ));
        }
        if row_ptr[0] != 0 || row_ptr[n_rows] != vals.len() || col_idx.len() != vals.len() {
            return bad("row_ptr endpoints do not match the stored entries".into());
        }
        for r in 0..n_rows {
            if row_ptr[r] > row_ptr[r + 1] {
                return bad(format!("row_ptr decreases at row {r}"));
            }
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            for (t, &c) in cols.iter().enumerate() {
                if c >= n_cols {
                    return bad(format!("column {c} out of range in row {r}"));
                }
                if t > 0 && cols[t - 1] >= c {
                    return bad(format!("columns not strictly increasing in row {r}"));
                }
            }
        }
        for &v in &vals {
            if !v.is_finite() {
                return bad("non-finite value".into());
            }
            if v == 0.0 {
                return bad("explicit zero stored".into());
            }
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and resulting zeros dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(LinalgError::InvalidCsr(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            if !v.is_finite() {
                return Err(LinalgError::InvalidCsr("non-finite value".into()));
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut vals = Vec::with_capacity(sorted.len());
        let mut i = 0;
        while i < sorted.len() {
            let (r, c, mut v) = sorted[i];
            i += 1;
            while i < sorted.len() && sorted[i].0 == r && sorted[i].1 == c {
                v += sorted[i].2;
                i += 1;
            }
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                vals.push(v);
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Builds a matrix from dense rows, dropping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut trip = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: n_cols,
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(rows.len(), n_cols, &trip)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        out
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Iterates over the `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// Looks up a single entry by binary search in its row.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(t) => self.vals[span.start + t],
            Err(_) => 0.0,
        }
    }

    /// Dot product of row `r` with a dense vector.
    pub fn row_dot(&self, r: usize, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, a) in self.row(r) {
            acc += a * v[c];
        }
        acc
    }

    pub fn row_norm2(&self, r: usize) -> f64 {
        norm2(&self.vals[self.row_ptr[r]..self.row_ptr[r + 1]])
    }

    /// Maximum absolute row sum.
    pub fn max_row_abs_sum(&self) -> f64 {
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `M v`, accumulating each row in ascending column order.
    pub fn spmv(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut out = vec![0.0; self.n_rows];
        self.spmv_into(v, &mut out)?;
        Ok(out)
    }

    pub fn spmv_into(&self, v: &[f64], out: &mut [f64]) -> Result<(), LinalgError> {
        check_len(self.n_cols, v.len())?;
        check_len(self.n_rows, out.len())?;
        #[cfg(feature = "parallel")]
        if self.vals.len() >= PAR_NNZ_THRESHOLD {
            use rayon::prelude::*;
            out.par_iter_mut()
                .enumerate()
                .for_each(|(r, o)| *o = self.row_dot(r, v));
            return Ok(());
        }
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(r, v);
        }
        Ok(())
    }

    /// `M^T v` by a transposed traversal of the same CSR arrays.
    pub fn spmv_t(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut out = vec![0.0; self.n_cols];
        self.spmv_t_into(v, &mut out)?;
        Ok(out)
    }

    pub fn spmv_t_into(&self, v: &[f64], out: &mut [f64]) -> Result<(), LinalgError> {
        check_len(self.n_rows, v.len())?;
        check_len(self.n_cols, out.len())?;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (c, a) in self.row(r) {
                out[c] += a * vr;
            }
        }
        Ok(())
    }

    /// Explicit transpose (CSR of `M^T`).
    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                let slot = next[c];
                col_idx[slot] = r;
                vals[slot] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinalgError> {
        check_len(self.n_cols, other.n_cols)?;
        let mut row_ptr = self.row_ptr.clone();
        let base = self.nnz();
        row_ptr.extend(other.row_ptr[1..].iter().map(|p| p + base));
        let mut col_idx = self.col_idx.clone();
        col_idx.extend_from_slice(&other.col_idx);
        let mut vals = self.vals.clone();
        vals.extend_from_slice(&other.vals);
        Ok(SparseMatrix {
            n_rows: self.n_rows + other.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Returns `alpha * M`.
    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        if alpha == 0.0 {
            return SparseMatrix::zeros(self.n_rows, self.n_cols);
        }
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Divides row `r` by `divisors[r]` for every row.
    pub fn scale_rows_inv(&mut self, divisors: &[f64]) {
        debug_assert_eq!(divisors.len(), self.n_rows);
        for r in 0..self.n_rows {
            let d = divisors[r];
            for v in &mut self.vals[self.row_ptr[r]..self.row_ptr[r + 1]] {
                *v /= d;
            }
        }
    }

    /// Submatrix restricted to the given rows (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for &r in rows {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            col_idx.extend_from_slice(&self.col_idx[span.clone()]);
            vals.extend_from_slice(&self.vals[span]);
            row_ptr.push(vals.len());
        }
        SparseMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// Submatrix restricted to the given columns, renumbered in the given
    /// order. Columns not listed are dropped.
    pub fn select_cols(&self, cols: &[usize]) -> SparseMatrix {
        let mut map = vec![usize::MAX; self.n_cols];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new;
        }
        let mut trip = Vec::new();
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                if map[c] != usize::MAX {
                    trip.push((r, map[c], v));
                }
            }
        }
        SparseMatrix::from_triplets(self.n_rows, cols.len(), &trip)
            .expect("column selection preserves validity")
    }

    /// Whether `M[i,j] == M[j,i]` for every stored entry.
    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }

    /// Whether every stored value is an integer.
    pub fn is_integral(&self) -> bool {
        self.vals.iter().all(|v| v.fract() == 0.0)
    }

    /// `<x, M x>` for a square matrix.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.n_rows).map(|r| x[r] * self.row_dot(r, x)).sum()
    }

    /// `<u, M v>`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        (0..self.n_rows).map(|r| u[r] * self.row_dot(r, v)).sum()
    }

    /// Dense column `c` as a vector of length `n_rows`.
    pub fn dense_col(&self, c: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, c)).collect()
    }

    /// Row-wise 2-norms.
    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.row_norm2(r)).collect()
    }
}

#[cfg(feature = "parallel")]
const PAR_NNZ_THRESHOLD: usize = 1 << 16;

fn check_len(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}
