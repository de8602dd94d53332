//! Linear-algebra substrate: CSR matrices, dense vector helpers,
//! spectral-norm estimation and dense LU.

mod lu;
mod sparse;

pub use lu::{lu_factor, LuFactors};
pub use sparse::SparseMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid CSR matrix: {0}")]
    InvalidCsr(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular to working precision (pivot {pivot} at column {col})")]
    Singular { col: usize, pivot: f64 },
}

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 500;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest singular value of `m`, by restarted Lanczos on `M^T M` with full
/// reorthogonalization.
///
/// Starts from a fixed irregular vector so the result does not depend on any
/// RNG. Stops once the Ritz residual of the top pair is at most `tol` times
/// the Ritz value, or after `max_iter` products with `M^T M`. Ritz values
/// never exceed the top eigenvalue, so neither does the estimate. Returns 0
/// for a matrix with no stored entries.
pub fn spectral_norm(m: &SparseMatrix, tol: f64, max_iter: usize) -> f64 {
    if m.is_empty() || m.n_cols() == 0 {
        return 0.0;
    }
    let n = m.n_cols();
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i * 7919) % 1009) as f64 / 1009.0)
        .collect();
    let s = norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);

    let block = n.min(LANCZOS_BLOCK);
    let mut mv = vec![0.0; m.n_rows()];
    let mut theta = 0.0f64;
    let mut used = 0usize;
    while used < max_iter {
        let mut basis: Vec<Vec<f64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(block);
        let mut beta: Vec<f64> = Vec::with_capacity(block);
        let mut done = false;
        loop {
            let j = basis.len() - 1;
            m.spmv_into(&basis[j], &mut mv).expect("sized");
            let mut w = m.spmv_t(&mv).expect("sized");
            used += 1;
            alpha.push(dot(&basis[j], &w));
            // two passes of Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for b in &basis {
                    let h = dot(b, &w);
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= h * bi);
                }
            }
            let bnorm = norm2(&w);
            let (t, s) = tridiag_top_pair(&alpha, &beta);
            theta = theta.max(t);
            let residual = bnorm * s.last().copied().unwrap_or(0.0).abs();
            let scale = t.abs().max(f64::MIN_POSITIVE);
            if bnorm <= 1e-14 * scale || residual <= tol * scale {
                done = true;
                break;
            }
            if basis.len() == block || used >= max_iter {
                // restart from the Ritz vector
                let mut y = vec![0.0; n];
                for (b, &c) in basis.iter().zip(&s) {
                    y.iter_mut().zip(b).for_each(|(yi, bi)| *yi += c * bi);
                }
                let yn = norm2(&y);
                if yn > 0.0 {
                    y.iter_mut().for_each(|x| *x /= yn);
                    v = y;
                }
                break;
            }
            beta.push(bnorm);
            w.iter_mut().for_each(|x| *x /= bnorm);
            basis.push(w);
        }
        if done {
            break;
        }
    }
    theta.max(0.0).sqrt()
}

/// Krylov block length between Lanczos restarts.
const LANCZOS_BLOCK: usize = 40;

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, with a unit eigenvector.
fn tridiag_top_pair(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    if k == 1 {
        return (alpha[0], vec![1.0]);
    }
    let off = |i: usize| if i < beta.len() { beta[i].abs() } else { 0.0 };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..k {
        let r = off(i) + if i > 0 { off(i - 1) } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    // Sturm count: eigenvalues strictly below x
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0f64;
        for i in 0..k {
            let b2 = if i > 0 {
                beta[i - 1] * beta[i - 1]
            } else {
                0.0
            };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = lo;

    // inverse iteration with a slightly shifted tridiagonal solve
    let shift = theta + 1e-10 * (theta.abs() + 1.0);
    let mut x = vec![1.0; k];
    for _ in 0..3 {
        x = tridiag_solve(alpha, beta, shift, &x);
        let xn = norm2(&x);
        if !(xn.is_finite() && xn > 0.0) {
            x = vec![0.0; k];
            x[k - 1] = 1.0;
            break;
        }
        x.iter_mut().for_each(|v| *v /= xn);
    }
    (theta, x)
}

/// Solves `(T - shift I) x = rhs` by Gaussian elimination with partial
/// pivoting on the tridiagonal band.
fn tridiag_solve(alpha: &[f64], beta: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let k = alpha.len();
    // rows hold (sub, diag, sup, sup2) after pivoting
    let mut diag: Vec<f64> = alpha.iter().map(|a| a - shift).collect();
    let mut sub: Vec<f64> = beta.to_vec();
    let mut sup: Vec<f64> = beta.to_vec();
    sup.push(0.0);
    let mut sup2 = vec![0.0; k];
    let mut b = rhs.to_vec();
    let tiny = f64::EPSILON * (shift.abs() + 1.0);
    for i in 0..k - 1 {
        if sub[i].abs() > diag[i].abs() {
            // swap rows i and i + 1
            std::mem::swap(&mut diag[i], &mut sub[i]);
            let next_diag = diag[i + 1];
            let next_sup = if i + 1 < k - 1 { sup[i + 1] } else { 0.0 };
            diag[i + 1] = sup[i];
            sup[i] = next_diag;
            sup2[i] = next_sup;
            if i + 1 < k - 1 {
                sup[i + 1] = 0.0;
            }
            b.swap(i, i + 1);
        }
        if diag[i] == 0.0 {
            diag[i] = tiny;
        }
        let f = sub[i] / diag[i];
        diag[i + 1] -= f * sup[i];
        if i + 1 < k - 1 {
            sup[i + 1] -= f * sup2[i];
        }
        b[i + 1] -= f * b[i];
    }
    if diag[k - 1] == 0.0 {
        diag[k - 1] = tiny;
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = b[i];
        if i + 1 < k {
            s -= sup[i] * x[i + 1];
        }
        if i + 2 < k {
            s -= sup2[i] * x[i + 2];
        }
        x[i] = s / diag[i];
    }
    x
}

/// `spectral_norm` with the default tolerance and iteration cap.
pub fn spectral_norm_default(m: &SparseMatrix) -> f64 {
    spectral_norm(m, SPECTRAL_TOL, SPECTRAL_MAX_ITER)
}
