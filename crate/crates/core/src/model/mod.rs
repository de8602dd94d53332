//! Binary integer programs, their saddle-point form, and evaluation of
//! objectives and feasibility in original units.

mod saddle;

pub use saddle::{build_saddle_form, preprocess, SaddleForm, ScalingRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm_inf, LinalgError, SparseMatrix};

/// Feasibility tolerance used when constraint data are not all integral.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("Q must be symmetric")]
    NotSymmetric,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("entry {index} of x is {value}, expected 0 or 1")]
    NotBinary { index: usize, value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Descriptive metadata carried alongside an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMeta {
    #[serde(default = "default_class")]
    pub class: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Rows of the equality block forming a TU elimination set.
    #[serde(default)]
    pub tu_rows: Option<Vec<usize>>,
    /// Columns paired with `tu_rows`; `B[tu_rows, tu_cols]` is invertible.
    #[serde(default)]
    pub tu_cols: Option<Vec<usize>>,
    /// Preferred sampler name.
    #[serde(default)]
    pub sampler: Option<String>,
    /// `nnz(Q) + nnz(A) + nnz(B)` as emitted by a generator.
    #[serde(default)]
    pub nnz: Option<usize>,
}

fn default_class() -> String {
    "custom".to_string()
}

impl Default for InstanceMeta {
    fn default() -> Self {
        InstanceMeta::new("custom")
    }
}

impl InstanceMeta {
    pub fn new(class: &str) -> Self {
        InstanceMeta {
            class: class.to_string(),
            seed: None,
            tu_rows: None,
            tu_cols: None,
            sampler: None,
            nnz: None,
        }
    }
}

/// `min <x,Qx> + <c,x> + c0  s.t.  Ax >= b, Bx = d, x in {0,1}^n`.
///
/// Built through [`BipInstance::new`] and the `with_*` methods, each of which
/// validates dimensions. Immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct BipInstance {
    n: usize,
    q: SparseMatrix,
    c: Vec<f64>,
    c0: f64,
    a: SparseMatrix,
    b: Vec<f64>,
    beq: SparseMatrix,
    d: Vec<f64>,
    meta: InstanceMeta,
}

impl BipInstance {
    /// An unconstrained linear instance with cost vector `c`.
    pub fn new(c: Vec<f64>) -> Result<Self, ModelError> {
        finite("c", &c)?;
        let n = c.len();
        Ok(BipInstance {
            n,
            q: SparseMatrix::zeros(n, n),
            c,
            c0: 0.0,
            a: SparseMatrix::zeros(0, n),
            b: Vec::new(),
            beq: SparseMatrix::zeros(0, n),
            d: Vec::new(),
            meta: InstanceMeta::default(),
        })
    }

    pub fn with_quadratic(mut self, q: SparseMatrix) -> Result<Self, ModelError> {
        dim("Q rows", self.n, q.n_rows())?;
        dim("Q cols", self.n, q.n_cols())?;
        if !q.is_symmetric() {
            return Err(ModelError::NotSymmetric);
        }
        self.q = q;
        Ok(self)
    }

    /// Sets the inequality block `A x >= b`.
    pub fn with_inequalities(mut self, a: SparseMatrix, b: Vec<f64>) -> Result<Self, ModelError> {
        dim("A cols", self.n, a.n_cols())?;
        dim("b", a.n_rows(), b.len())?;
        finite("b", &b)?;
        self.a = a;
        self.b = b;
        Ok(self)
    }

    /// Sets the equality block `B x = d`.
    pub fn with_equalities(mut self, beq: SparseMatrix, d: Vec<f64>) -> Result<Self, ModelError> {
        dim("B cols", self.n, beq.n_cols())?;
        dim("d", beq.n_rows(), d.len())?;
        finite("d", &d)?;
        self.beq = beq;
        self.d = d;
        Ok(self)
    }

    pub fn with_constant(mut self, c0: f64) -> Result<Self, ModelError> {
        if !c0.is_finite() {
            return Err(ModelError::NonFinite("c0"));
        }
        self.c0 = c0;
        Ok(self)
    }

    pub fn with_meta(mut self, meta: InstanceMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of inequality rows.
    pub fn m1(&self) -> usize {
        self.a.n_rows()
    }

    /// Number of equality rows.
    pub fn m2(&self) -> usize {
        self.beq.n_rows()
    }

    pub fn q(&self) -> &SparseMatrix {
        &self.q
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn ineq_matrix(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn ineq_rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn eq_matrix(&self) -> &SparseMatrix {
        &self.beq
    }

    pub fn eq_rhs(&self) -> &[f64] {
        &self.d
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut InstanceMeta {
        &mut self.meta
    }

    pub fn is_linear(&self) -> bool {
        self.q.is_empty()
    }

    /// Size measure `nnz(Q) + nnz(K)` with `K = -[A; B]`.
    pub fn nnz(&self) -> usize {
        self.q.nnz() + self.a.nnz() + self.beq.nnz()
    }

    /// Whether `A, b, B, d` are all integral, which makes feasibility
    /// checks of binary points exact in floating point.
    pub fn constraints_integral(&self) -> bool {
        self.a.is_integral()
            && self.beq.is_integral()
            && self.b.iter().all(|v| v.fract() == 0.0)
            && self.d.iter().all(|v| v.fract() == 0.0)
    }
}

fn dim(what: &'static str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::Dimension {
            what,
            expected,
            found,
        })
    }
}

fn finite(what: &'static str, v: &[f64]) -> Result<(), ModelError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::NonFinite(what))
    }
}

/// Checks that `x` has length `n` and binary entries.
pub fn check_binary(n: usize, x: &[f64]) -> Result<(), ModelError> {
    dim("x", n, x.len())?;
    match x.iter().position(|&v| v != 0.0 && v != 1.0) {
        Some(index) => Err(ModelError::NotBinary {
            index,
            value: x[index],
        }),
        None => Ok(()),
    }
}

/// `<x,Qx> + <c,x> + c0` for a binary `x`, in original units.
pub fn eval_objective(inst: &BipInstance, x: &[f64]) -> Result<f64, ModelError> {
    check_binary(inst.n, x)?;
    Ok(objective_unchecked(inst, x))
}

/// Objective without the binary check; valid for any `x` of length `n`.
pub fn objective_unchecked(inst: &BipInstance, x: &[f64]) -> f64 {
    let quad = if inst.q.is_empty() {
        0.0
    } else {
        inst.q.quad_form(x)
    };
    quad + dot(&inst.c, x) + inst.c0
}

/// Constraint violation of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// `||max(b - Ax, 0)||_inf`
    pub ineq: f64,
    /// `||Bx - d||_inf`
    pub eq: f64,
}

impl Violation {
    pub fn within(&self, tol: f64) -> bool {
        self.ineq <= tol && self.eq <= tol
    }
}

pub fn feasibility_violation(inst: &BipInstance, x: &[f64]) -> Result<Violation, ModelError> {
    dim("x", inst.n, x.len())?;
    let mut ineq = 0.0f64;
    for (r, &br) in inst.b.iter().enumerate() {
        ineq = ineq.max(br - inst.a.row_dot(r, x));
    }
    let resid: Vec<f64> = inst
        .d
        .iter()
        .enumerate()
        .map(|(r, &dr)| inst.beq.row_dot(r, x) - dr)
        .collect();
    Ok(Violation {
        ineq,
        eq: norm_inf(&resid),
    })
}

/// Feasibility of a binary point. Exact when constraint data are integral,
/// otherwise within [`FEAS_TOL`].
pub fn is_feasible(inst: &BipInstance, x: &[f64]) -> Result<bool, ModelError> {
    let v = feasibility_violation(inst, x)?;
    let tol = if inst.constraints_integral() {
        0.0
    } else {
        FEAS_TOL
    };
    Ok(v.within(tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sm(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn objective_linear() {
        let inst = BipInstance::new(vec![2.0, 1.0]).unwrap();
        assert_eq!(eval_objective(&inst, &[1.0, 1.0]).unwrap(), 3.0);
    }

    #[test]
    fn objective_zero_vector() {
        let inst = BipInstance::new(vec![2.0, -7.0])
            .unwrap()
            .with_quadratic(sm(&[&[1.0, 3.0], &[3.0, -2.0]]))
            .unwrap();
        assert_eq!(eval_objective(&inst, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn objective_symmetric_offdiagonal() {
        let inst = BipInstance::new(vec![0.0, 0.0])
            .unwrap()
            .with_quadratic(sm(&[&[0.0, 1.0], &[1.0, 0.0]]))
            .unwrap();
        assert_eq!(eval_objective(&inst, &[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn objective_rejects_fractional() {
        let inst = BipInstance::new(vec![1.0]).unwrap();
        assert!(matches!(
            eval_objective(&inst, &[0.5]),
            Err(ModelError::NotBinary { index: 0, .. })
        ));
    }

    #[test]
    fn asymmetric_q_rejected() {
        let r = BipInstance::new(vec![0.0, 0.0])
            .unwrap()
            .with_quadratic(sm(&[&[0.0, 1.0], &[0.0, 0.0]]));
        assert_eq!(r.unwrap_err(), ModelError::NotSymmetric);
    }

    #[test]
    fn violations() {
        let inst = BipInstance::new(vec![1.0, 1.0])
            .unwrap()
            .with_inequalities(sm(&[&[1.0, 1.0]]), vec![1.0])
            .unwrap();
        assert_eq!(feasibility_violation(&inst, &[1.0, 0.0]).unwrap().ineq, 0.0);
        assert_eq!(feasibility_violation(&inst, &[0.0, 0.0]).unwrap().ineq, 1.0);

        let inst = BipInstance::new(vec![1.0, 1.0])
            .unwrap()
            .with_equalities(sm(&[&[1.0, 1.0]]), vec![1.0])
            .unwrap();
        assert_eq!(feasibility_violation(&inst, &[1.0, 1.0]).unwrap().eq, 1.0);
        assert!(!is_feasible(&inst, &[1.0, 1.0]).unwrap());
        assert!(is_feasible(&inst, &[0.0, 1.0]).unwrap());
    }

    #[test]
    fn rhs_length_checked() {
        let r = BipInstance::new(vec![1.0])
            .unwrap()
            .with_inequalities(sm(&[&[1.0]]), vec![1.0, 2.0]);
        assert!(matches!(r, Err(ModelError::Dimension { what: "b", .. })));
    }
}
