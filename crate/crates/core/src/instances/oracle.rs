//! Exhaustive enumeration of `{0,1}^n` for small instances.
//!
//! Points are visited in Gray-code order within chunks whose high bits are
//! fixed, so each step flips one variable and the objective and row
//! activities update in `O(nnz of that column)`. Chunks restart from a
//! fresh evaluation, which bounds round-off drift on non-integral data.

use serde::{Deserialize, Serialize};

use super::InstanceError;
use crate::exec::{map_indexed, Execution};
use crate::linalg::SparseMatrix;
use crate::model::{is_feasible, objective_unchecked, BipInstance, FEAS_TOL};

/// Hard cap on the number of enumerated variables.
pub const ORACLE_MAX_N: usize = 24;

const CHUNK_BITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub z_opt: f64,
    pub x_opt: Vec<f64>,
    pub feasible_count: u64,
    pub enumerated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum OracleOutcome {
    Optimal(OracleResult),
    Infeasible { enumerated: u64 },
}

impl OracleOutcome {
    pub fn optimal(&self) -> Option<&OracleResult> {
        match self {
            OracleOutcome::Optimal(r) => Some(r),
            OracleOutcome::Infeasible { .. } => None,
        }
    }
}

/// Per-row bookkeeping for incremental feasibility.
struct Rows {
    rhs: Vec<f64>,
    is_eq: Vec<bool>,
    tol: f64,
    /// Column `i` lists `(row, value)` over the stacked `[A; B]`.
    cols: Vec<Vec<(usize, f64)>>,
}

impl Rows {
    fn new(inst: &BipInstance) -> Rows {
        let stacked = inst
            .ineq_matrix()
            .vstack(inst.eq_matrix())
            .expect("column counts agree");
        let t = stacked.transpose();
        let mut rhs = inst.ineq_rhs().to_vec();
        rhs.extend_from_slice(inst.eq_rhs());
        let mut is_eq = vec![false; inst.m1()];
        is_eq.resize(inst.m1() + inst.m2(), true);
        Rows {
            rhs,
            is_eq,
            tol: if inst.constraints_integral() {
                0.0
            } else {
                FEAS_TOL
            },
            cols: (0..t.n_rows()).map(|i| t.row(i).collect()).collect(),
        }
    }

    fn violated(&self, r: usize, act: f64) -> bool {
        if self.is_eq[r] {
            (act - self.rhs[r]).abs() > self.tol
        } else {
            act < self.rhs[r] - self.tol
        }
    }
}

struct ChunkBest {
    best: Option<(f64, u64)>,
    feasible: u64,
}

fn bits_of(mask: u64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (mask >> i & 1) as f64).collect()
}

fn better(z: f64, mask: u64, cur: Option<(f64, u64)>) -> bool {
    match cur {
        None => true,
        Some((bz, bm)) => z < bz || (z == bz && mask < bm),
    }
}

fn scan_chunk(
    inst: &BipInstance,
    rows: &Rows,
    q: &SparseMatrix,
    high: u64,
    low_bits: usize,
) -> ChunkBest {
    let n = inst.n();
    let c = inst.c();
    let base = high << low_bits;
    let mut x = bits_of(base, n);
    let mut qx = if q.is_empty() {
        vec![0.0; n]
    } else {
        q.spmv(&x).expect("square")
    };
    let mut z = objective_unchecked(inst, &x);
    let mut act = vec![0.0; rows.rhs.len()];
    for (i, col) in rows.cols.iter().enumerate() {
        if x[i] == 1.0 {
            for &(r, v) in col {
                act[r] += v;
            }
        }
    }
    let mut n_viol = (0..act.len()).filter(|&r| rows.violated(r, act[r])).count();
    let mut mask = base;
    let mut out = ChunkBest {
        best: None,
        feasible: 0,
    };

    let steps = 1u64 << low_bits;
    for step in 0..steps {
        if step > 0 {
            let i = step.trailing_zeros() as usize;
            let qii = q.get(i, i);
            if x[i] == 0.0 {
                z += c[i] + 2.0 * qx[i] + qii;
                x[i] = 1.0;
            } else {
                z -= c[i] + 2.0 * qx[i] - qii;
                x[i] = 0.0;
            }
            let sign = if x[i] == 1.0 { 1.0 } else { -1.0 };
            if !q.is_empty() {
                for (k, v) in q.row(i) {
                    qx[k] += sign * v;
                }
            }
            for &(r, v) in &rows.cols[i] {
                let before = rows.violated(r, act[r]);
                act[r] += sign * v;
                let after = rows.violated(r, act[r]);
                match (before, after) {
                    (true, false) => n_viol -= 1,
                    (false, true) => n_viol += 1,
                    _ => {}
                }
            }
            mask ^= 1u64 << i;
        }
        if n_viol == 0 {
            out.feasible += 1;
            let screen = out.best.map_or(f64::INFINITY, |(bz, _)| bz);
            if z <= screen + 1e-9 * (1.0 + screen.abs()) || out.best.is_none() {
                let exact = objective_unchecked(inst, &x);
                if better(exact, mask, out.best) {
                    out.best = Some((exact, mask));
                }
            }
        }
    }
    out
}

/// Minimum of the objective over all feasible binary points, ties broken
/// toward the lowest binary value with `x_0` as the least significant bit.
pub fn brute_force(inst: &BipInstance, exec: Execution) -> Result<OracleOutcome, InstanceError> {
    let n = inst.n();
    if n > ORACLE_MAX_N {
        return Err(InstanceError::TooLarge {
            n,
            max: ORACLE_MAX_N,
        });
    }
    let rows = Rows::new(inst);
    let low_bits = n.min(CHUNK_BITS);
    let chunks = 1u64 << (n - low_bits);
    let q = inst.q();
    let parts = map_indexed(chunks as usize, exec, |h| {
        scan_chunk(inst, &rows, q, h as u64, low_bits)
    });

    let mut best: Option<(f64, u64)> = None;
    let mut feasible = 0;
    for p in parts {
        feasible += p.feasible;
        if let Some((z, m)) = p.best {
            if better(z, m, best) {
                best = Some((z, m));
            }
        }
    }
    let enumerated = 1u64 << n;
    Ok(match best {
        None => OracleOutcome::Infeasible { enumerated },
        Some((z, m)) => {
            let x = bits_of(m, n);
            debug_assert!(is_feasible(inst, &x).unwrap_or(false));
            OracleOutcome::Optimal(OracleResult {
                z_opt: z,
                x_opt: x,
                feasible_count: feasible,
                enumerated,
            })
        }
    })
}
