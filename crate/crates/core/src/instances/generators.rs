//! Random instance generators. Each is a pure function of its sizes and
//! seed, and every emitted instance has at least one feasible point.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::InstanceError;
use crate::linalg::SparseMatrix;
use crate::model::{BipInstance, InstanceMeta};

/// Max-cut weights are rounded to multiples of `2^-16`, so sums of a few
/// thousand of them are exact in `f64`.
pub const WEIGHT_GRID: f64 = 65536.0;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_costs(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(1..=100) as f64).collect()
}

fn meta(class: &str, seed: Option<u64>) -> InstanceMeta {
    InstanceMeta {
        seed,
        ..InstanceMeta::new(class)
    }
}

fn finish(inst: BipInstance) -> BipInstance {
    let nnz = inst.nnz();
    let mut inst = inst;
    inst.meta_mut().nnz = Some(nnz);
    inst
}

fn positive(what: &str, v: usize, min: usize) -> Result<(), InstanceError> {
    if v < min {
        Err(InstanceError::InvalidSize(format!(
            "{what} must be >= {min}, got {v}"
        )))
    } else {
        Ok(())
    }
}

/// Covering instance over `n` sets and `m` elements from explicit data:
/// element `j` is covered by the sets in `families[j]`.
pub fn setcover_from(
    costs: Vec<f64>,
    families: &[Vec<usize>],
) -> Result<BipInstance, InstanceError> {
    let n = costs.len();
    let mut trip = Vec::new();
    for (j, fam) in families.iter().enumerate() {
        if fam.is_empty() {
            return Err(InstanceError::InvalidSize(format!(
                "element {j} is covered by no set"
            )));
        }
        trip.extend(fam.iter().map(|&i| (j, i, 1.0)));
    }
    let a = SparseMatrix::from_triplets(families.len(), n, &trip)?;
    let inst = BipInstance::new(costs)?.with_inequalities(a, vec![1.0; families.len()])?;
    Ok(inst)
}

/// `min <c,x>` subject to every element being covered; costs uniform on
/// `{1..100}` and each element covered by a random family of
/// `Uniform{2..max(2, n/10)}` sets (at most `n`).
pub fn gen_setcover(m: usize, n: usize, seed: u64) -> Result<BipInstance, InstanceError> {
    positive("m", m, 1)?;
    positive("n", n, 1)?;
    let mut r = rng(seed);
    let costs = uniform_costs(&mut r, n);
    let hi = (n / 10).max(2);
    let families: Vec<Vec<usize>> = (0..m)
        .map(|_| {
            let size = r.gen_range(2..=hi).min(n);
            let mut fam = sample(&mut r, n, size).into_vec();
            fam.sort_unstable();
            fam
        })
        .collect();
    let inst = setcover_from(costs, &families)?.with_meta(meta("setcover", Some(seed)));
    Ok(finish(inst))
}

/// Knapsack with values `v`, weights `w` and capacity `floor(sum(w) / 2)`,
/// as `min -<v,x>` subject to `-<w,x> >= -W`.
pub fn knapsack_from(v: &[f64], w: &[f64]) -> Result<BipInstance, InstanceError> {
    if v.len() != w.len() {
        return Err(InstanceError::InvalidSize(
            "values and weights differ in length".into(),
        ));
    }
    let cap = (w.iter().sum::<f64>() / 2.0).floor();
    let row = SparseMatrix::from_triplets(
        1,
        w.len(),
        &w.iter()
            .enumerate()
            .map(|(i, &wi)| (0, i, -wi))
            .collect::<Vec<_>>(),
    )?;
    let inst =
        BipInstance::new(v.iter().map(|x| -x).collect())?.with_inequalities(row, vec![-cap])?;
    Ok(inst)
}

pub fn gen_knapsack(n: usize, seed: u64) -> Result<BipInstance, InstanceError> {
    positive("n", n, 1)?;
    let mut r = rng(seed);
    let v = uniform_costs(&mut r, n);
    let w = uniform_costs(&mut r, n);
    Ok(finish(
        knapsack_from(&v, &w)?.with_meta(meta("knapsack", Some(seed))),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxCutForm {
    /// Quadratic objective, no constraints.
    Qp,
    /// Linearized with one variable per edge and three envelope rows.
    Ip,
}

/// Max cut on `n` vertices with weighted edges `(i, j, w)`, `i < j`, as
/// minimization of the negated cut value.
///
/// The quadratic form stores `Q_ij = Q_ji = w_ij`, so `<x,Qx>` contributes
/// `2 w_ij x_i x_j`, and `c_i = -sum_j w_ij`.
pub fn maxcut_from(
    n: usize,
    edges: &[(usize, usize, f64)],
    form: MaxCutForm,
) -> Result<BipInstance, InstanceError> {
    positive("n", n, 2)?;
    let mut c = vec![0.0; n];
    for &(i, j, w) in edges {
        if i >= j || j >= n {
            return Err(InstanceError::InvalidSize(format!("bad edge ({i}, {j})")));
        }
        c[i] -= w;
        c[j] -= w;
    }
    match form {
        MaxCutForm::Qp => {
            let trip: Vec<_> = edges
                .iter()
                .flat_map(|&(i, j, w)| [(i, j, w), (j, i, w)])
                .collect();
            let q = SparseMatrix::from_triplets(n, n, &trip)?;
            Ok(BipInstance::new(c)?.with_quadratic(q)?)
        }
        MaxCutForm::Ip => {
            let ne = edges.len();
            let mut trip = Vec::with_capacity(7 * ne);
            let mut rhs = Vec::with_capacity(3 * ne);
            for (e, &(i, j, w)) in edges.iter().enumerate() {
                let y = n + e;
                c.push(2.0 * w);
                // y <= x_i, y <= x_j, y >= x_i + x_j - 1
                trip.extend([(3 * e, i, 1.0), (3 * e, y, -1.0)]);
                trip.extend([(3 * e + 1, j, 1.0), (3 * e + 1, y, -1.0)]);
                trip.extend([
                    (3 * e + 2, y, 1.0),
                    (3 * e + 2, i, -1.0),
                    (3 * e + 2, j, -1.0),
                ]);
                rhs.extend([0.0, 0.0, -1.0]);
            }
            let a = SparseMatrix::from_triplets(3 * ne, n + ne, &trip)?;
            Ok(BipInstance::new(c)?.with_inequalities(a, rhs)?)
        }
    }
}

/// Each edge present with probability 0.5, weight uniform on `[-8, 10]`
/// rounded to the `2^-16` grid.
pub fn random_graph(n: usize, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(0.5) {
                let w: f64 = r.gen_range(-8.0..=10.0);
                edges.push((i, j, (w * WEIGHT_GRID).round() / WEIGHT_GRID));
            }
        }
    }
    edges
}

pub fn gen_maxcut(n: usize, seed: u64, form: MaxCutForm) -> Result<BipInstance, InstanceError> {
    positive("n", n, 2)?;
    let edges = random_graph(n, seed);
    let class = match form {
        MaxCutForm::Qp => "maxcut_qp",
        MaxCutForm::Ip => "maxcut_ip",
    };
    Ok(finish(
        maxcut_from(n, &edges, form)?.with_meta(meta(class, Some(seed))),
    ))
}

/// Flat index of triple `(i, j, k)` in an `n^3` assignment vector.
pub fn assign3d_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

/// Axial 3D assignment with cost vector `c` of length `n^3`. Rows `0..n`
/// fix `i`, rows `n..2n` fix `j`, rows `2n..3n` fix `k`.
///
/// The TU metadata covers the first two groups: they form the incidence
/// matrix of a bipartite multigraph of rank `2n - 1`, so the last `j` row is
/// dropped and the columns `(i, 0, 0)` and `(0, j, 0)` give a spanning tree.
pub fn assign3d_from(n: usize, c: Vec<f64>) -> Result<BipInstance, InstanceError> {
    positive("n", n, 1)?;
    if c.len() != n * n * n {
        return Err(InstanceError::InvalidSize(format!(
            "expected {} costs",
            n * n * n
        )));
    }
    let mut trip = Vec::with_capacity(3 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let col = assign3d_index(n, i, j, k);
                trip.extend([(i, col, 1.0), (n + j, col, 1.0), (2 * n + k, col, 1.0)]);
            }
        }
    }
    let b = SparseMatrix::from_triplets(3 * n, n * n * n, &trip)?;
    let mut tu_rows: Vec<usize> = (0..n).collect();
    tu_rows.extend(n..2 * n - 1);
    let mut tu_cols: Vec<usize> = (0..n).map(|i| assign3d_index(n, i, 0, 0)).collect();
    tu_cols.extend((1..n).map(|j| assign3d_index(n, 0, j, 0)));
    let m = InstanceMeta {
        tu_rows: Some(tu_rows),
        tu_cols: Some(tu_cols),
        sampler: Some("assignment3d".into()),
        ..InstanceMeta::new("assign3d")
    };
    Ok(BipInstance::new(c)?
        .with_equalities(b, vec![1.0; 3 * n])?
        .with_meta(m))
}

pub fn gen_assign3d(n: usize, seed: u64) -> Result<BipInstance, InstanceError> {
    positive("n", n, 1)?;
    let mut r = rng(seed);
    let c = uniform_costs(&mut r, n * n * n);
    let mut inst = assign3d_from(n, c)?;
    inst.meta_mut().seed = Some(seed);
    Ok(finish(inst))
}

/// Facility location with opening costs `f` and assignment costs
/// `cost[i][j]`. Variables are `x_i` followed by `y_ij` at
/// `n_f + i * n_c + j`.
pub fn facility_from(f: Vec<f64>, cost: &[Vec<f64>]) -> Result<BipInstance, InstanceError> {
    let n_f = f.len();
    positive("n_f", n_f, 1)?;
    if cost.len() != n_f {
        return Err(InstanceError::InvalidSize(
            "cost rows must match n_f".into(),
        ));
    }
    let n_c = cost[0].len();
    positive("n_c", n_c, 1)?;
    if cost.iter().any(|r| r.len() != n_c) {
        return Err(InstanceError::InvalidSize("ragged cost matrix".into()));
    }
    let y = |i: usize, j: usize| n_f + i * n_c + j;
    let n = n_f + n_f * n_c;
    let mut c = f;
    c.extend(cost.iter().flatten().copied());

    let eq: Vec<_> = (0..n_c)
        .flat_map(|j| (0..n_f).map(move |i| (j, y(i, j), 1.0)))
        .collect();
    let mut link = Vec::with_capacity(2 * n_f * n_c);
    for i in 0..n_f {
        for j in 0..n_c {
            let row = i * n_c + j;
            link.extend([(row, i, 1.0), (row, y(i, j), -1.0)]);
        }
    }
    let m = InstanceMeta {
        tu_rows: Some((0..n_c).collect()),
        tu_cols: Some((0..n_c).map(|j| y(0, j)).collect()),
        ..InstanceMeta::new("facility")
    };
    Ok(BipInstance::new(c)?
        .with_equalities(SparseMatrix::from_triplets(n_c, n, &eq)?, vec![1.0; n_c])?
        .with_inequalities(
            SparseMatrix::from_triplets(n_f * n_c, n, &link)?,
            vec![0.0; n_f * n_c],
        )?
        .with_meta(m))
}

pub fn gen_facility(n_f: usize, n_c: usize, seed: u64) -> Result<BipInstance, InstanceError> {
    positive("n_f", n_f, 1)?;
    positive("n_c", n_c, 1)?;
    let mut r = rng(seed);
    let f = uniform_costs(&mut r, n_f);
    let cost: Vec<Vec<f64>> = (0..n_f).map(|_| uniform_costs(&mut r, n_c)).collect();
    let mut inst = facility_from(f, &cost)?;
    inst.meta_mut().seed = Some(seed);
    Ok(finish(inst))
}

/// Variable layout of the unary-encoded TSP model on `n` cities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TspLayout {
    pub n: usize,
}

impl TspLayout {
    /// Arc variables `x_ij`, `i != j`, row-major.
    pub fn arc(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j);
        i * (self.n - 1) + if j < i { j } else { j - 1 }
    }

    pub fn n_arcs(&self) -> usize {
        self.n * (self.n - 1)
    }

    /// Order variables `y_ik` for city `i >= 1` and level `t = 0..n-2`,
    /// where level `t` means `u_i >= t + 3`.
    pub fn level(&self, i: usize, t: usize) -> usize {
        debug_assert!(i >= 1 && t < self.n - 2);
        self.n_arcs() + (i - 1) * (self.n - 2) + t
    }

    pub fn n_vars(&self) -> usize {
        self.n_arcs() + (self.n - 1) * (self.n - 2)
    }

    /// Full variable vector of a tour given as a city sequence starting at
    /// the depot 0.
    pub fn encode_tour(&self, tour: &[usize]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; self.n_vars()];
        for p in 0..n {
            x[self.arc(tour[p], tour[(p + 1) % n])] = 1.0;
        }
        // city at position p (0-based) has u = p + 1
        for (p, &city) in tour.iter().enumerate().skip(1) {
            let u = p + 1;
            for t in 0..n - 2 {
                if u >= t + 3 {
                    x[self.level(city, t)] = 1.0;
                }
            }
        }
        x
    }
}

/// MTZ model with unary order variables and arc costs `dist[i][j]`.
///
/// The degree equalities are the incidence matrix of the complete
/// bipartite graph minus its diagonal. Their TU metadata drops the last
/// in-degree row and uses the spanning tree of arcs `(i, 0)`, `(0, j)` and
/// `(1, 2)`.
pub fn tsp_from(dist: &[Vec<f64>]) -> Result<BipInstance, InstanceError> {
    let n = dist.len();
    if n < 3 {
        return Err(InstanceError::InvalidSize(format!(
            "TSP needs n >= 3, got {n}"
        )));
    }
    let lay = TspLayout { n };
    let nv = lay.n_vars();
    let mut c = vec![0.0; nv];
    let mut eq = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let a = lay.arc(i, j);
                c[a] = dist[i][j];
                eq.push((i, a, 1.0));
                eq.push((n + j, a, 1.0));
            }
        }
    }
    let mut ineq = Vec::new();
    let mut rhs = Vec::new();
    let mut row = 0;
    let nf = (n - 1) as f64;
    for i in 1..n {
        for j in 1..n {
            if i == j {
                continue;
            }
            // sum_t y_it - sum_t y_jt + n x_ij <= n - 1
            for t in 0..n - 2 {
                ineq.push((row, lay.level(i, t), -1.0));
                ineq.push((row, lay.level(j, t), 1.0));
            }
            ineq.push((row, lay.arc(i, j), -(n as f64)));
            rhs.push(-nf);
            row += 1;
        }
    }
    for i in 1..n {
        for t in 1..n - 2 {
            ineq.push((row, lay.level(i, t - 1), 1.0));
            ineq.push((row, lay.level(i, t), -1.0));
            rhs.push(0.0);
            row += 1;
        }
    }
    let mut tu_cols: Vec<usize> = (1..n).map(|i| lay.arc(i, 0)).collect();
    tu_cols.extend((1..n).map(|j| lay.arc(0, j)));
    tu_cols.push(lay.arc(1, 2));
    let m = InstanceMeta {
        tu_rows: Some((0..2 * n - 1).collect()),
        tu_cols: Some(tu_cols),
        ..InstanceMeta::new("tsp_mtz")
    };
    Ok(BipInstance::new(c)?
        .with_equalities(
            SparseMatrix::from_triplets(2 * n, nv, &eq)?,
            vec![1.0; 2 * n],
        )?
        .with_inequalities(SparseMatrix::from_triplets(row, nv, &ineq)?, rhs)?
        .with_meta(m))
}

pub fn gen_tsp_mtz(n: usize, seed: u64) -> Result<BipInstance, InstanceError> {
    if n < 3 {
        return Err(InstanceError::InvalidSize(format!(
            "TSP needs n >= 3, got {n}"
        )));
    }
    let mut r = rng(seed);
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        r.gen_range(1..=100) as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut inst = tsp_from(&dist)?;
    inst.meta_mut().seed = Some(seed);
    Ok(finish(inst))
}
