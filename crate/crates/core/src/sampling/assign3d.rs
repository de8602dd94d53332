//! Customized sampling for axial 3D assignment.
//!
//! Variables are indexed by triples `(i, j, k)` at flat position
//! `(i * n + j) * n + k`, and a feasible point selects exactly one triple
//! per value of each coordinate.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{validate_probabilities, RngStream, SampleBatch, SamplingError};
use crate::exec::{for_each_chunk_mut, Execution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assign3dParams {
    /// Side length.
    pub n: usize,
    /// Greedy phase looks at the `ceil(gamma * n)` largest entries of `p`.
    pub gamma: f64,
    /// Rounds of pairwise interchange; each round proposes `n` random pairs.
    pub rounds: usize,
}

impl Assign3dParams {
    /// `gamma = 4`, `2n` improvement rounds.
    pub fn with_defaults(n: usize) -> Self {
        Assign3dParams {
            n,
            gamma: 4.0,
            rounds: 2 * n,
        }
    }
}

/// Side length `n` with `n^3 == len`, if any.
pub fn cube_side(len: usize) -> Option<usize> {
    let mut n = (len as f64).cbrt().round() as usize;
    while n * n * n > len {
        n -= 1;
    }
    while (n + 1) * (n + 1) * (n + 1) <= len {
        n += 1;
    }
    (n * n * n == len).then_some(n)
}

#[inline]
fn flat(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

/// Non-conflicting triples accepted greedily from the top of `p`, ordered by
/// decreasing `p` with ties broken by lower flat index.
pub fn greedy_partial(p: &[f64], n: usize, gamma: f64) -> Vec<(usize, usize, usize)> {
    let total = p.len();
    let top = ((gamma * n as f64).ceil() as usize).min(total);
    if top == 0 {
        return Vec::new();
    }
    let cmp = |a: &usize, b: &usize| -> Ordering { p[*b].total_cmp(&p[*a]).then(a.cmp(b)) };
    let mut order: Vec<usize> = (0..total).collect();
    if top < total {
        order.select_nth_unstable_by(top - 1, cmp);
        order.truncate(top);
    }
    order.sort_unstable_by(cmp);

    let (mut ui, mut uj, mut uk) = (vec![false; n], vec![false; n], vec![false; n]);
    let mut out = Vec::new();
    for idx in order {
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        if !ui[i] && !uj[j] && !uk[k] {
            ui[i] = true;
            uj[j] = true;
            uk[k] = true;
            out.push((i, j, k));
        }
    }
    out
}

#[cfg(test)]
fn total_cost(cost: &[f64], n: usize, t: &[(usize, usize, usize)]) -> f64 {
    t.iter().map(|&(i, j, k)| cost[flat(n, i, j, k)]).sum()
}

/// Pairwise-interchange improvement on a full assignment. Each accepted
/// move strictly lowers the cost.
fn improve(
    cost: &[f64],
    n: usize,
    t: &mut [(usize, usize, usize)],
    rounds: usize,
    rng: &mut RngStream,
) {
    if n < 2 {
        return;
    }
    for _ in 0..rounds * n {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let (ta, tb) = (t[a], t[b]);
        let now = cost[flat(n, ta.0, ta.1, ta.2)] + cost[flat(n, tb.0, tb.1, tb.2)];
        let swap_j = cost[flat(n, ta.0, tb.1, ta.2)] + cost[flat(n, tb.0, ta.1, tb.2)];
        let swap_k = cost[flat(n, ta.0, ta.1, tb.2)] + cost[flat(n, tb.0, tb.1, ta.2)];
        if swap_j < now && swap_j <= swap_k {
            t[a].1 = tb.1;
            t[b].1 = ta.1;
        } else if swap_k < now {
            t[a].2 = tb.2;
            t[b].2 = ta.2;
        }
    }
}

/// One completed and improved assignment per row. Row `l` draws its
/// completion permutations and interchange pairs from lane `lane_base + l`.
pub fn sample_assignment3d(
    p: &[f64],
    k: usize,
    params: Assign3dParams,
    cost: &[f64],
    seed: u64,
    lane_base: u64,
    exec: Execution,
) -> Result<SampleBatch, SamplingError> {
    let n = params.n;
    let len = n * n * n;
    if p.len() != len {
        return Err(SamplingError::NotCubic {
            expected: len,
            found: p.len(),
        });
    }
    if cost.len() != len {
        return Err(SamplingError::NotCubic {
            expected: len,
            found: cost.len(),
        });
    }
    if !(params.gamma >= 1.0) {
        return Err(SamplingError::Gamma(params.gamma));
    }
    if n == 0 {
        return Ok(SampleBatch::empty(0));
    }
    let p = validate_probabilities(p)?;
    let partial = greedy_partial(&p, n, params.gamma);

    let (mut ui, mut uj, mut uk) = (vec![false; n], vec![false; n], vec![false; n]);
    for &(i, j, kk) in &partial {
        ui[i] = true;
        uj[j] = true;
        uk[kk] = true;
    }
    let free = |used: &[bool]| -> Vec<usize> { (0..n).filter(|&v| !used[v]).collect() };
    let (fi, fj, fk) = (free(&ui), free(&uj), free(&uk));

    let mut bits = vec![0u8; k * len];
    for_each_chunk_mut(&mut bits, len, exec, |l, row| {
        let mut rng = RngStream::new(seed, lane_base + l as u64);
        let mut pj = fj.clone();
        let mut pk = fk.clone();
        pj.shuffle(&mut rng);
        pk.shuffle(&mut rng);
        let mut t = partial.clone();
        t.extend(
            fi.iter()
                .zip(&pj)
                .zip(&pk)
                .map(|((&i, &j), &kk)| (i, j, kk)),
        );
        improve(cost, n, &mut t, params.rounds, &mut rng);
        for (i, j, kk) in t {
            row[flat(n, i, j, kk)] = 1;
        }
    });
    Ok(SampleBatch::from_bits(k, len, bits))
}

/// Cost of a batch row read as an assignment.
pub fn assignment_cost(cost: &[f64], row: &[u8]) -> f64 {
    row.iter()
        .zip(cost)
        .filter(|(&b, _)| b == 1)
        .map(|(_, c)| c)
        .sum()
}

#[cfg(test)]
fn improve_for_test(
    cost: &[f64],
    n: usize,
    t: &mut [(usize, usize, usize)],
    rounds: usize,
    seed: u64,
) -> (f64, f64) {
    let before = total_cost(cost, n, t);
    let mut rng = RngStream::new(seed, 0);
    improve(cost, n, t, rounds, &mut rng);
    (before, total_cost(cost, n, t))
}
