//! Saddle-point form `min_x max_y <x,Qx> + <c,x> + <y, Kx + r>` and its
//! normalization.

use crate::linalg::{norm2, spectral_norm, SparseMatrix, SPECTRAL_MAX_ITER, SPECTRAL_TOL};

use super::{BipInstance, ModelError};

/// Divisors applied during [`preprocess`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRecord {
    /// Per-row divisor of `K` from row normalization (1 for zero rows).
    pub row_scales: Vec<f64>,
    /// `||Q||_2 + ||c||_2` before scaling, or 1 when that sum is 0.
    pub obj_scale: f64,
    /// Spectral norm of `K` after row normalization, or 1 when `K` is zero.
    pub k_scale: f64,
}

impl ScalingRecord {
    fn identity(m: usize) -> Self {
        ScalingRecord {
            row_scales: vec![1.0; m],
            obj_scale: 1.0,
            k_scale: 1.0,
        }
    }
}

/// Solver-facing data. `K = -[A; B]` with the `m1` inequality rows first.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleForm {
    pub q: SparseMatrix,
    pub c: Vec<f64>,
    pub k: SparseMatrix,
    pub r: Vec<f64>,
    pub m1: usize,
    pub m2: usize,
    pub scaling: ScalingRecord,
}

impl SaddleForm {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }

    /// `<x, Q x> + <c, x>` in the form's (possibly scaled) units.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let quad = if self.q.is_empty() {
            0.0
        } else {
            self.q.quad_form(x)
        };
        quad + crate::linalg::dot(&self.c, x)
    }
}

pub fn build_saddle_form(inst: &BipInstance) -> Result<SaddleForm, ModelError> {
    let k = inst.ineq_matrix().vstack(inst.eq_matrix())?.scaled(-1.0);
    let mut r = inst.ineq_rhs().to_vec();
    r.extend_from_slice(inst.eq_rhs());
    let m1 = inst.m1();
    let m2 = inst.m2();
    Ok(SaddleForm {
        q: inst.q().clone(),
        c: inst.c().to_vec(),
        k,
        r,
        m1,
        m2,
        scaling: ScalingRecord::identity(m1 + m2),
    })
}

/// Normalizes a saddle form built by [`build_saddle_form`], in order:
///
/// 1. each nonzero row of `K` (and its `r` entry) divided by the row 2-norm;
/// 2. `Q` and `c` divided by `||Q||_2 + ||c||_2` (skipped when that is 0);
/// 3. `K` and `r` divided by the spectral norm of `K`.
///
/// Afterwards `||K||_2 = 1` unless `K` is zero.
pub fn preprocess(sf: &SaddleForm) -> SaddleForm {
    let mut out = sf.clone();
    let m = out.m();

    let row_scales: Vec<f64> = out
        .k
        .row_norms()
        .into_iter()
        .map(|s| if s > 0.0 { s } else { 1.0 })
        .collect();
    out.k.scale_rows_inv(&row_scales);
    for (ri, s) in out.r.iter_mut().zip(&row_scales) {
        *ri /= s;
    }

    let q_norm = spectral_norm(&out.q, SPECTRAL_TOL, SPECTRAL_MAX_ITER);
    let obj_sum = q_norm + norm2(&out.c);
    let obj_scale = if obj_sum > 0.0 { obj_sum } else { 1.0 };
    if obj_sum > 0.0 {
        out.q = out.q.scaled(1.0 / obj_scale);
        out.c.iter_mut().for_each(|v| *v /= obj_scale);
    }

    let k_norm = if m > 0 {
        spectral_norm(&out.k, SPECTRAL_TOL, SPECTRAL_MAX_ITER)
    } else {
        0.0
    };
    let k_scale = if k_norm > 0.0 { k_norm } else { 1.0 };
    if k_norm > 0.0 {
        out.k = out.k.scaled(1.0 / k_scale);
        out.r.iter_mut().for_each(|v| *v /= k_scale);
    }

    out.scaling = ScalingRecord {
        row_scales,
        obj_scale,
        k_scale,
    };
    out
}
