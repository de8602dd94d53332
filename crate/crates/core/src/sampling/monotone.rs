//! Monotone relaxation of equality constraints and class-specific repair.

use super::assign3d::cube_side;
use crate::linalg::SparseMatrix;
use crate::model::{is_feasible, BipInstance};

/// Converts a solution of a relaxed instance back into one satisfying the
/// original equalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairHook {
    /// Axial 3D assignment with side `n`.
    Assignment3d { n: usize },
}

/// The registered repair for an instance's class tag, if any.
pub fn repair_hook_for(inst: &BipInstance) -> Option<RepairHook> {
    match inst.meta().class.as_str() {
        "assign3d" => cube_side(inst.n()).map(|n| RepairHook::Assignment3d { n }),
        _ => None,
    }
}

impl RepairHook {
    /// Repairs `x` and returns it only if the result is feasible for
    /// `original`.
    pub fn repair(&self, original: &BipInstance, x: &[f64]) -> Option<Vec<f64>> {
        let out = match *self {
            RepairHook::Assignment3d { n } => repair_assignment3d(n, original.c(), x)?,
        };
        is_feasible(original, &out).ok()?.then_some(out)
    }
}

/// Over-covered assignments drop their costliest redundant triples; under-
/// covered ones are completed with the cheapest free triples.
fn repair_assignment3d(n: usize, cost: &[f64], x: &[f64]) -> Option<Vec<f64>> {
    let len = n * n * n;
    if x.len() != len || cost.len() != len {
        return None;
    }
    let split = |idx: usize| (idx / (n * n), (idx / n) % n, idx % n);
    let mut counts = [vec![0usize; n], vec![0usize; n], vec![0usize; n]];
    let mut on: Vec<usize> = (0..len).filter(|&i| x[i] == 1.0).collect();
    for &idx in &on {
        let (i, j, k) = split(idx);
        counts[0][i] += 1;
        counts[1][j] += 1;
        counts[2][k] += 1;
    }
    let mut out = x.to_vec();

    on.sort_by(|&a, &b| cost[b].total_cmp(&cost[a]).then(a.cmp(&b)));
    for idx in on {
        let (i, j, k) = split(idx);
        if counts[0][i] > 1 && counts[1][j] > 1 && counts[2][k] > 1 {
            out[idx] = 0.0;
            counts[0][i] -= 1;
            counts[1][j] -= 1;
            counts[2][k] -= 1;
        }
    }

    let mut free: Vec<usize> = (0..len)
        .filter(|&idx| {
            let (i, j, k) = split(idx);
            counts[0][i] == 0 && counts[1][j] == 0 && counts[2][k] == 0
        })
        .collect();
    free.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
    for idx in free {
        let (i, j, k) = split(idx);
        if counts[0][i] == 0 && counts[1][j] == 0 && counts[2][k] == 0 {
            out[idx] = 1.0;
            counts[0][i] = 1;
            counts[1][j] = 1;
            counts[2][k] = 1;
        }
    }
    Some(out)
}

/// Replaces `Bx = d` by `Bx >= d` when `c >= 0`, or by `Bx <= d` when
/// `c <= 0`. Quadratic or mixed-sign instances come back unchanged with no
/// hook.
pub fn monotone_relax(inst: &BipInstance) -> (BipInstance, Option<RepairHook>) {
    let c = inst.c();
    let nonneg = c.iter().all(|&v| v >= 0.0);
    let nonpos = c.iter().all(|&v| v <= 0.0);
    if !inst.is_linear() || inst.m2() == 0 || !(nonneg || nonpos) {
        return (inst.clone(), None);
    }
    let (rows, rhs) = if nonneg {
        (inst.eq_matrix().clone(), inst.eq_rhs().to_vec())
    } else {
        (
            inst.eq_matrix().scaled(-1.0),
            inst.eq_rhs().iter().map(|v| -v).collect(),
        )
    };
    let a = inst
        .ineq_matrix()
        .vstack(&rows)
        .expect("column counts agree");
    let mut b = inst.ineq_rhs().to_vec();
    b.extend(rhs);
    let relaxed = BipInstance::new(c.to_vec())
        .and_then(|r| r.with_constant(inst.c0()))
        .and_then(|r| r.with_inequalities(a, b))
        .and_then(|r| r.with_equalities(SparseMatrix::zeros(0, inst.n()), Vec::new()))
        .expect("dimensions carried over")
        .with_meta(inst.meta().clone());
    (relaxed, repair_hook_for(inst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InstanceMeta;

    fn sm(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn assignment_n2(cost: Vec<f64>) -> BipInstance {
        let n = 2;
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let col = (i * n + j) * n + k;
                    trip.push((i, col, 1.0));
                    trip.push((n + j, col, 1.0));
                    trip.push((2 * n + k, col, 1.0));
                }
            }
        }
        BipInstance::new(cost)
            .unwrap()
            .with_equalities(
                SparseMatrix::from_triplets(6, 8, &trip).unwrap(),
                vec![1.0; 6],
            )
            .unwrap()
            .with_meta(InstanceMeta::new("assign3d"))
    }

    #[test]
    fn nonnegative_costs_become_covering() {
        let inst = BipInstance::new(vec![1.0, 1.0])
            .unwrap()
            .with_equalities(sm(&[&[1.0, 1.0]]), vec![1.0])
            .unwrap();
        let (r, hook) = monotone_relax(&inst);
        assert_eq!(r.ineq_matrix().to_dense(), vec![vec![1.0, 1.0]]);
        assert_eq!(r.ineq_rhs(), &[1.0]);
        assert_eq!(r.m2(), 0);
        assert!(hook.is_none());
    }

    #[test]
    fn nonpositive_costs_become_packing() {
        let inst = BipInstance::new(vec![-1.0, 0.0])
            .unwrap()
            .with_equalities(sm(&[&[1.0, 1.0]]), vec![1.0])
            .unwrap();
        let (r, _) = monotone_relax(&inst);
        assert_eq!(r.ineq_matrix().to_dense(), vec![vec![-1.0, -1.0]]);
        assert_eq!(r.ineq_rhs(), &[-1.0]);
    }

    #[test]
    fn mixed_signs_unchanged() {
        let inst = BipInstance::new(vec![1.0, -1.0])
            .unwrap()
            .with_equalities(sm(&[&[1.0, 1.0]]), vec![1.0])
            .unwrap();
        let (r, hook) = monotone_relax(&inst);
        assert_eq!(r, inst);
        assert!(hook.is_none());
    }

    #[test]
    fn repair_drops_costlier_duplicate() {
        // (0,0,0) and (1,1,1) form an assignment; (0,1,1) doubles i=0, j=1, k=1
        let mut cost = vec![1.0; 8];
        cost[3] = 5.0;
        let inst = assignment_n2(cost);
        let hook = repair_hook_for(&inst).unwrap();
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        x[7] = 1.0;
        x[3] = 1.0;
        let fixed = hook.repair(&inst, &x).unwrap();
        let mut want = vec![0.0; 8];
        want[0] = 1.0;
        want[7] = 1.0;
        assert_eq!(fixed, want);
        assert!(is_feasible(&inst, &fixed).unwrap());
    }

    #[test]
    fn repair_output_always_feasible_n2() {
        let inst = assignment_n2((0..8).map(|v| v as f64).collect());
        let hook = repair_hook_for(&inst).unwrap();
        let mut repaired = 0;
        for m in 0u32..256 {
            let x: Vec<f64> = (0..8).map(|i| (m >> i & 1) as f64).collect();
            if let Some(fixed) = hook.repair(&inst, &x) {
                assert!(is_feasible(&inst, &fixed).unwrap());
                repaired += 1;
            }
        }
        assert!(repaired > 0);
    }

    #[test]
    fn costliest_extra_triple_is_dropped_n2() {
        let feasible = [[0usize, 7], [1, 6], [2, 5], [3, 4]];
        for pair in feasible {
            for extra in (0..8).filter(|e| !pair.contains(e)) {
                let mut cost = vec![1.0; 8];
                cost[extra] = 100.0;
                let inst = assignment_n2(cost);
                let mut x = vec![0.0; 8];
                for &i in pair.iter().chain([&extra]) {
                    x[i] = 1.0;
                }
                let mut want = vec![0.0; 8];
                for &i in &pair {
                    want[i] = 1.0;
                }
                let got = repair_hook_for(&inst).unwrap().repair(&inst, &x);
                assert_eq!(got, Some(want), "pair {pair:?} extra {extra}");
            }
        }
    }
}
