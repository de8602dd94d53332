//! Elimination of variables through a totally unimodular equality block.
//!
//! Given rows `J` of `B` and columns `I` with `B[J, I]` invertible, the
//! equalities `B_J x = d_J` fix `x_I = s + S x_Ibar` with
//! `s = B_JI^{-1} d_J` and `S = -B_JI^{-1} B_J,Ibar`. Substituting into the
//! objective and remaining constraints gives an instance over `x_Ibar`
//! whose binary feasible points lift one-to-one onto those of the original.

use thiserror::Error;

use crate::linalg::{lu_factor, LinalgError, LuFactors, SparseMatrix};
use crate::model::{check_binary, BipInstance, InstanceMeta, ModelError};

/// Largest `min(rows, cols)` accepted by [`verify_tu_small`].
pub const MAX_VERIFY_DIM: usize = 12;

/// Tolerance for lifted or solved values to count as integral.
pub const INTEGRAL_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TuError {
    #[error("B[J, I] is singular")]
    Singular,
    #[error("|J| = {rows} but |I| = {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("index {index} out of range for {what} of size {size}")]
    BadIndex {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("duplicate index {0}")]
    Duplicate(usize),
    #[error("{0} is not integral")]
    NotIntegral(&'static str),
    #[error("lifted x[{index}] = {value} is not binary")]
    NotBinary { index: usize, value: f64 },
    #[error("matrix too large to enumerate (min dimension {dim} > {max}); use the generator's structural TU flags")]
    TooLarge { dim: usize, max: usize },
    #[error("missing TU metadata (tu_rows and tu_cols)")]
    MissingMeta,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<LinalgError> for TuError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { .. } => TuError::Singular,
            other => TuError::Model(ModelError::Linalg(other)),
        }
    }
}

/// Reduced instance plus the data needed to map its points back.
#[derive(Debug, Clone)]
pub struct TuReform {
    rows: Vec<usize>,
    cols: Vec<usize>,
    cols_bar: Vec<usize>,
    lu: LuFactors,
    s: Vec<f64>,
    s_op: SparseMatrix,
    reduced: BipInstance,
    n_orig: usize,
}

impl TuReform {
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Columns kept as variables of the reduced instance, ascending.
    pub fn kept_cols(&self) -> &[usize] {
        &self.cols_bar
    }

    pub fn lu(&self) -> &LuFactors {
        &self.lu
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// `S` as a sparse integer matrix of shape `|I| x |Ibar|`.
    pub fn s_operator(&self) -> &SparseMatrix {
        &self.s_op
    }

    pub fn reduced(&self) -> &BipInstance {
        &self.reduced
    }

    pub fn original_n(&self) -> usize {
        self.n_orig
    }

    /// `x_I = s + S x_bar` for any real `x_bar`, scattered with `x_Ibar = x_bar`.
    pub fn lift_unchecked(&self, x_bar: &[f64]) -> Vec<f64> {
        let xi = self.s_op.spmv(x_bar).expect("reduced width");
        let mut x = vec![0.0; self.n_orig];
        for (k, &col) in self.cols_bar.iter().enumerate() {
            x[col] = x_bar[k];
        }
        for (k, &col) in self.cols.iter().enumerate() {
            x[col] = self.s[k] + xi[k];
        }
        x
    }

    /// Lifts a binary reduced point, checking that `x_I` is binary within
    /// [`INTEGRAL_TOL`] and rounding it exactly.
    pub fn lift(&self, x_bar: &[f64]) -> Result<Vec<f64>, TuError> {
        check_binary(self.cols_bar.len(), x_bar)?;
        let mut x = self.lift_unchecked(x_bar);
        for &col in &self.cols {
            let v = x[col];
            let r = v.round();
            if (v - r).abs() > INTEGRAL_TOL || !(r == 0.0 || r == 1.0) {
                return Err(TuError::NotBinary {
                    index: col,
                    value: v,
                });
            }
            x[col] = r;
        }
        Ok(x)
    }

    /// Lift of a fractional reduced point with `x_I` clamped into `[0, 1]`.
    pub fn lift_fractional(&self, x_bar: &[f64]) -> Vec<f64> {
        let mut x = self.lift_unchecked(x_bar);
        for &col in &self.cols {
            x[col] = x[col].clamp(0.0, 1.0);
        }
        x
    }

    /// Restriction of a full point to the kept columns.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.cols_bar.iter().map(|&c| x[c]).collect()
    }
}

fn check_indices(idx: &[usize], size: usize, what: &'static str) -> Result<(), TuError> {
    let mut seen = vec![false; size];
    for &i in idx {
        if i >= size {
            return Err(TuError::BadIndex {
                what,
                index: i,
                size,
            });
        }
        if seen[i] {
            return Err(TuError::Duplicate(i));
        }
        seen[i] = true;
    }
    Ok(())
}

fn round_integral(v: &mut [f64], what: &'static str) -> Result<(), TuError> {
    for x in v.iter_mut() {
        let r = x.round();
        if (*x - r).abs() > INTEGRAL_TOL {
            return Err(TuError::NotIntegral(what));
        }
        *x = r + 0.0;
    }
    Ok(())
}

/// Sparse columns of `m`: entry `c` lists `(row, value)` pairs.
fn columns(m: &SparseMatrix) -> Vec<Vec<(usize, f64)>> {
    let t = m.transpose();
    (0..t.n_rows()).map(|c| t.row(c).collect()).collect()
}

/// `X M` where `M` is given by sparse columns over `X`'s column space.
fn right_mul(x: &SparseMatrix, m_cols: &[Vec<(usize, f64)>]) -> Result<SparseMatrix, TuError> {
    let x_cols = columns(x);
    let mut trip = Vec::new();
    for (q, mc) in m_cols.iter().enumerate() {
        for &(inner, mv) in mc {
            for &(r, xv) in &x_cols[inner] {
                trip.push((r, q, xv * mv));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(
        x.n_rows(),
        m_cols.len(),
        &trip,
    )?)
}

/// Builds the reduced instance for rows `j_rows` of the equality block and
/// columns `i_cols`.
pub fn tu_reformulate(
    inst: &BipInstance,
    j_rows: &[usize],
    i_cols: &[usize],
) -> Result<TuReform, TuError> {
    let n = inst.n();
    let b = inst.eq_matrix();
    let d = inst.eq_rhs();
    if j_rows.len() != i_cols.len() {
        return Err(TuError::NotSquare {
            rows: j_rows.len(),
            cols: i_cols.len(),
        });
    }
    check_indices(j_rows, b.n_rows(), "equality rows")?;
    check_indices(i_cols, n, "columns")?;

    let b_j = b.select_rows(j_rows);
    let d_j: Vec<f64> = j_rows.iter().map(|&r| d[r]).collect();
    if !b_j.is_integral() {
        return Err(TuError::NotIntegral("B_J"));
    }
    if d_j.iter().any(|v| v.fract() != 0.0) {
        return Err(TuError::NotIntegral("d_J"));
    }

    let p = i_cols.len();
    let mut in_i = vec![usize::MAX; n];
    for (k, &c) in i_cols.iter().enumerate() {
        in_i[c] = k;
    }
    let cols_bar: Vec<usize> = (0..n).filter(|&c| in_i[c] == usize::MAX).collect();
    let nb = cols_bar.len();

    let b_ji = b_j.select_cols(i_cols).to_dense();
    let lu = lu_factor(&b_ji)?;
    let mut s = lu.solve(&d_j)?;
    round_integral(&mut s, "B_JI^{-1} d_J")?;

    // S one column at a time: -B_JI^{-1} times the matching column of B_J.
    let bj_cols = columns(&b_j);
    let mut s_trip = Vec::new();
    for (q, &col) in cols_bar.iter().enumerate() {
        if bj_cols[col].is_empty() {
            continue;
        }
        let mut rhs = vec![0.0; p];
        for &(r, v) in &bj_cols[col] {
            rhs[r] = v;
        }
        let mut sc = lu.solve(&rhs)?;
        round_integral(&mut sc, "S")?;
        for (k, v) in sc.into_iter().enumerate() {
            if v != 0.0 {
                s_trip.push((k, q, -v));
            }
        }
    }
    let s_op = SparseMatrix::from_triplets(p, nb, &s_trip)?;

    // Full substitution x = s_full + M x_bar.
    let mut s_full = vec![0.0; n];
    for (k, &c) in i_cols.iter().enumerate() {
        s_full[c] = s[k];
    }
    let s_cols = columns(&s_op);
    let m_cols: Vec<Vec<(usize, f64)>> = cols_bar
        .iter()
        .enumerate()
        .map(|(q, &c)| {
            let mut col = vec![(c, 1.0)];
            col.extend(s_cols[q].iter().map(|&(k, v)| (i_cols[k], v)));
            col
        })
        .collect();
    let m_t = |v: &[f64]| -> Vec<f64> {
        m_cols
            .iter()
            .map(|col| col.iter().map(|&(r, mv)| mv * v[r]).sum())
            .collect()
    };

    let q = inst.q();
    let (q_red, q_s) = if q.is_empty() {
        (SparseMatrix::zeros(nb, nb), vec![0.0; n])
    } else {
        let q_m = right_mul(q, &m_cols)?;
        let q_m_cols = columns(&q_m);
        let mut trip = Vec::new();
        for (col, entries) in q_m_cols.iter().enumerate() {
            let mut dense = vec![0.0; n];
            for &(r, v) in entries {
                dense[r] = v;
            }
            for (row, v) in m_t(&dense).into_iter().enumerate() {
                if v != 0.0 {
                    trip.push((row, col, v));
                }
            }
        }
        (
            SparseMatrix::from_triplets(nb, nb, &trip)?,
            q.spmv(&s_full)?,
        )
    };
    let grad: Vec<f64> = inst
        .c()
        .iter()
        .zip(&q_s)
        .map(|(ci, qs)| ci + 2.0 * qs)
        .collect();
    let c_red = m_t(&grad);
    let c0_red =
        inst.c0() + crate::linalg::dot(&s_full, &q_s) + crate::linalg::dot(inst.c(), &s_full);

    let a = inst.ineq_matrix();
    let a_s = a.spmv(&s_full)?;
    let mut a_red = right_mul(a, &m_cols)?;
    let mut b_red: Vec<f64> = inst
        .ineq_rhs()
        .iter()
        .zip(&a_s)
        .map(|(bi, v)| bi - v)
        .collect();
    // Box rows: S x_bar >= -s and -S x_bar >= s - 1.
    a_red = a_red.vstack(&s_op)?.vstack(&s_op.scaled(-1.0))?;
    b_red.extend(s.iter().map(|v| -v));
    b_red.extend(s.iter().map(|v| v - 1.0));

    let mut in_j = vec![false; b.n_rows()];
    for &r in j_rows {
        in_j[r] = true;
    }
    let jbar: Vec<usize> = (0..b.n_rows()).filter(|&r| !in_j[r]).collect();
    let b_jbar = b.select_rows(&jbar);
    let bs = b_jbar.spmv(&s_full)?;
    let beq_red = right_mul(&b_jbar, &m_cols)?;
    let d_red: Vec<f64> = jbar.iter().zip(&bs).map(|(&r, v)| d[r] - v).collect();

    let meta = InstanceMeta {
        tu_rows: None,
        tu_cols: None,
        ..inst.meta().clone()
    };
    let mut reduced = BipInstance::new(c_red)?
        .with_constant(c0_red)?
        .with_inequalities(a_red, b_red)?
        .with_equalities(beq_red, d_red)?
        .with_meta(meta);
    if !q_red.is_empty() {
        reduced = reduced.with_quadratic(symmetrize(&q_red)?)?;
    }

    Ok(TuReform {
        rows: j_rows.to_vec(),
        cols: i_cols.to_vec(),
        cols_bar,
        lu,
        s,
        s_op,
        reduced,
        n_orig: n,
    })
}

/// Reformulation driven by the instance's `tu_rows`/`tu_cols` metadata.
pub fn tu_from_meta(inst: &BipInstance) -> Result<TuReform, TuError> {
    match (&inst.meta().tu_rows, &inst.meta().tu_cols) {
        (Some(j), Some(i)) => tu_reformulate(inst, j, i),
        _ => Err(TuError::MissingMeta),
    }
}

/// `(M + M^T) / 2`, removing round-off asymmetry from `M^T Q M`.
fn symmetrize(m: &SparseMatrix) -> Result<SparseMatrix, TuError> {
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * m.nnz());
    for r in 0..m.n_rows() {
        for (c, v) in m.row(r) {
            trip.push((r, c, 0.5 * v));
            trip.push((c, r, 0.5 * v));
        }
    }
    Ok(SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), &trip)?)
}

/// Exact determinant by fraction-free elimination.
fn bareiss(mut a: Vec<Vec<i128>>) -> i128 {
    let k = a.len();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for p in 0..k {
        if a[p][p] == 0 {
            match (p + 1..k).find(|&r| a[r][p] != 0) {
                Some(r) => {
                    a.swap(p, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in p + 1..k {
            for j in p + 1..k {
                a[i][j] = (a[i][j] * a[p][p] - a[i][p] * a[p][j]) / prev;
            }
        }
        prev = a[p][p];
    }
    sign * a[k - 1][k - 1]
}

/// Advances `idx` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Whether every square submatrix of `m` has determinant in `{-1, 0, 1}`,
/// by exhaustive exact enumeration.
pub fn verify_tu_small(m: &[Vec<i64>]) -> Result<bool, TuError> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let dim = rows.min(cols);
    if dim > MAX_VERIFY_DIM {
        return Err(TuError::TooLarge {
            dim,
            max: MAX_VERIFY_DIM,
        });
    }
    if m.iter().flatten().any(|v| v.abs() > 1) {
        return Ok(false);
    }
    for k in 2..=dim {
        let mut ri: Vec<usize> = (0..k).collect();
        loop {
            let mut ci: Vec<usize> = (0..k).collect();
            loop {
                let sub: Vec<Vec<i128>> = ri
                    .iter()
                    .map(|&r| ci.iter().map(|&c| m[r][c] as i128).collect())
                    .collect();
                if bareiss(sub).abs() > 1 {
                    return Ok(false);
                }
                if !next_combination(&mut ci, cols) {
                    break;
                }
            }
            if !next_combination(&mut ri, rows) {
                break;
            }
        }
    }
    Ok(true)
}

/// Integer copy of a sparse matrix for [`verify_tu_small`].
pub fn to_integer_dense(m: &SparseMatrix) -> Result<Vec<Vec<i64>>, TuError> {
    if !m.is_integral() {
        return Err(TuError::NotIntegral("matrix"));
    }
    Ok(m.to_dense()
        .into_iter()
        .map(|r| r.into_iter().map(|v| v as i64).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_objective, is_feasible};

    fn sm(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn pick_one() -> BipInstance {
        BipInstance::new(vec![2.0, 1.0])
            .unwrap()
            .with_equalities(sm(&[&[1.0, 1.0]]), vec![1.0])
            .unwrap()
    }

    #[test]
    fn single_equality_example() {
        let tu = tu_reformulate(&pick_one(), &[0], &[0]).unwrap();
        assert_eq!(tu.s(), &[1.0]);
        assert_eq!(tu.s_operator().to_dense(), vec![vec![-1.0]]);
        let r = tu.reduced();
        assert_eq!(r.n(), 1);
        assert_eq!(r.c(), &[-1.0]);
        assert_eq!(r.c0(), 2.0);
        assert_eq!(r.ineq_matrix().to_dense(), vec![vec![-1.0], vec![1.0]]);
        assert_eq!(r.ineq_rhs(), &[-1.0, 0.0]);
        assert_eq!(r.m2(), 0);
        assert_eq!(tu.lift(&[1.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(tu.lift(&[0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(eval_objective(r, &[1.0]).unwrap(), 1.0);
        assert_eq!(eval_objective(&pick_one(), &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn identity_block_forces_everything() {
        let inst = BipInstance::new(vec![1.0, 1.0])
            .unwrap()
            .with_equalities(SparseMatrix::identity(2), vec![0.0, 0.0])
            .unwrap();
        let tu = tu_reformulate(&inst, &[0, 1], &[0, 1]).unwrap();
        assert_eq!(tu.reduced().n(), 0);
        assert_eq!(tu.lift(&[]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn singular_block() {
        let inst = BipInstance::new(vec![1.0, 1.0])
            .unwrap()
            .with_equalities(sm(&[&[1.0, 1.0], &[1.0, 1.0]]), vec![1.0, 1.0])
            .unwrap();
        assert_eq!(
            tu_reformulate(&inst, &[0, 1], &[0, 1]).unwrap_err(),
            TuError::Singular
        );
    }

    #[test]
    fn fractional_data_rejected() {
        let inst = BipInstance::new(vec![1.0, 1.0])
            .unwrap()
            .with_equalities(sm(&[&[1.0, 1.0]]), vec![0.5])
            .unwrap();
        assert_eq!(
            tu_reformulate(&inst, &[0], &[0]).unwrap_err(),
            TuError::NotIntegral("d_J")
        );
    }

    #[test]
    fn quadratic_objective_consistent() {
        let q = sm(&[&[1.0, 0.5, 0.0], &[0.5, -2.0, 1.0], &[0.0, 1.0, 3.0]]);
        let inst = BipInstance::new(vec![1.0, -1.0, 2.0])
            .unwrap()
            .with_quadratic(q)
            .unwrap()
            .with_equalities(sm(&[&[1.0, 1.0, 0.0]]), vec![1.0])
            .unwrap()
            .with_constant(0.25)
            .unwrap();
        let tu = tu_reformulate(&inst, &[0], &[1]).unwrap();
        for m in 0..4u32 {
            let xb = vec![(m & 1) as f64, (m >> 1 & 1) as f64];
            if !is_feasible(tu.reduced(), &xb).unwrap() {
                continue;
            }
            let x = tu.lift(&xb).unwrap();
            assert!(is_feasible(&inst, &x).unwrap());
            let a = eval_objective(tu.reduced(), &xb).unwrap();
            let b = eval_objective(&inst, &x).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn tu_verifier() {
        assert!(verify_tu_small(&[vec![1, 1], vec![0, 1]]).unwrap());
        assert!(!verify_tu_small(&[vec![1, 1], vec![-1, 1]]).unwrap());
        assert!(verify_tu_small(&[vec![1], vec![-1], vec![0]]).unwrap());
        assert!(!verify_tu_small(&[vec![2]]).unwrap());
        assert!(verify_tu_small(&vec![vec![0; 13]; 13]).is_err());
    }

    #[test]
    fn bareiss_matches_known() {
        assert_eq!(bareiss(vec![vec![2, 1], vec![1, 3]]), 5);
        assert_eq!(bareiss(vec![vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(
            bareiss(vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]),
            -3
        );
    }
}
