//! Randomized rounding: batched Bernoulli sampling, incumbent updates, the
//! 3D-assignment sampler and monotone relaxation.

mod assign3d;
mod monotone;
mod rng;

pub use assign3d::{
    assignment_cost, cube_side, greedy_partial, sample_assignment3d, Assign3dParams,
};
pub use monotone::{monotone_relax, repair_hook_for, RepairHook};
pub use rng::RngStream;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indexed, Execution};
use crate::model::{
    check_binary, feasibility_violation, objective_unchecked, BipInstance, FEAS_TOL,
};

/// Largest `n` accepted by [`product_distribution_mean`].
pub const MAX_ENUM_N: usize = 20;

const PROB_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("probability p[{index}] = {value} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("batch width {found} does not match instance size {expected}")]
    Width { expected: usize, found: usize },
    #[error("enumeration needs n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("3D assignment expects {expected} = n^3 entries, got {found}")]
    NotCubic { expected: usize, found: usize },
    #[error("gamma must be >= 1, got {0}")]
    Gamma(f64),
    #[error("unknown sampler `{0}`")]
    UnknownSampler(String),
}

/// Which sampler turns the relaxed iterate into binary candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[default]
    Bernoulli,
    Assignment3d,
}

impl SamplerKind {
    pub fn from_name(name: &str) -> Result<Self, SamplingError> {
        match name {
            "bernoulli" | "default" => Ok(SamplerKind::Bernoulli),
            "assignment3d" => Ok(SamplerKind::Assignment3d),
            other => Err(SamplingError::UnknownSampler(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Bernoulli => "bernoulli",
            SamplerKind::Assignment3d => "assignment3d",
        }
    }
}

/// `rows x n` binary matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    rows: usize,
    n: usize,
    bits: Vec<u8>,
}

impl SampleBatch {
    pub fn from_bits(rows: usize, n: usize, bits: Vec<u8>) -> Self {
        assert_eq!(bits.len(), rows * n, "bit buffer size");
        debug_assert!(bits.iter().all(|&b| b <= 1));
        SampleBatch { rows, n, bits }
    }

    pub fn empty(n: usize) -> Self {
        SampleBatch {
            rows: 0,
            n,
            bits: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn row(&self, l: usize) -> &[u8] {
        &self.bits[l * self.n..(l + 1) * self.n]
    }

    pub fn row_f64(&self, l: usize) -> Vec<f64> {
        self.row(l).iter().map(|&b| b as f64).collect()
    }

    pub fn column_mean(&self, i: usize) -> f64 {
        if self.rows == 0 {
            return 0.0;
        }
        let ones: usize = (0..self.rows)
            .map(|l| self.bits[l * self.n + i] as usize)
            .sum();
        ones as f64 / self.rows as f64
    }

    /// Appends the rows of `other`, which must have the same width.
    pub fn append(&mut self, other: &SampleBatch) {
        assert_eq!(self.n, other.n, "batch width");
        self.bits.extend_from_slice(&other.bits);
        self.rows += other.rows;
    }
}

/// Best feasible binary point seen so far, in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub x_best: Option<Vec<f64>>,
    pub z_best: f64,
    pub found_at_seconds: f64,
    pub found_at_iter: u64,
}

impl Default for Incumbent {
    fn default() -> Self {
        Incumbent {
            x_best: None,
            z_best: f64::INFINITY,
            found_at_seconds: 0.0,
            found_at_iter: 0,
        }
    }
}

impl Incumbent {
    pub fn is_some(&self) -> bool {
        self.x_best.is_some()
    }

    /// Replaces the incumbent iff `z` is strictly smaller.
    pub fn offer(&mut self, x: Vec<f64>, z: f64, iter: u64, seconds: f64) -> bool {
        if z < self.z_best {
            self.x_best = Some(x);
            self.z_best = z;
            self.found_at_iter = iter;
            self.found_at_seconds = seconds;
            true
        } else {
            false
        }
    }
}

/// Clamps `p` into `[0, 1]`, rejecting entries further than `1e-12` outside.
pub fn validate_probabilities(p: &[f64]) -> Result<Vec<f64>, SamplingError> {
    p.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value.is_nan() || value < -PROB_SLACK || value > 1.0 + PROB_SLACK {
                Err(SamplingError::OutOfRange { index, value })
            } else {
                Ok(value.clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// Draws `k` rows from the product distribution with marginals `p`. Row `l`
/// uses lane `lane_base + l` of `seed`, and entry `i` consumes the `i`-th
/// uniform of that lane.
pub fn bernoulli_batch(
    p: &[f64],
    k: usize,
    seed: u64,
    lane_base: u64,
    exec: Execution,
) -> Result<SampleBatch, SamplingError> {
    let p = validate_probabilities(p)?;
    let n = p.len();
    let mut bits = vec![0u8; k * n];
    if n > 0 {
        crate::exec::for_each_chunk_mut(&mut bits, n, exec, |l, row| {
            let mut rng = RngStream::new(seed, lane_base + l as u64);
            for (b, &pi) in row.iter_mut().zip(&p) {
                *b = (rng.next_f64() < pi) as u8;
            }
        });
    }
    Ok(SampleBatch::from_bits(k, n, bits))
}

/// Objective of each row of `batch` on `inst`, or `None` when the row is
/// infeasible.
pub fn evaluate_batch(
    batch: &SampleBatch,
    inst: &BipInstance,
    exec: Execution,
) -> Result<Vec<Option<f64>>, SamplingError> {
    if batch.n() != inst.n() {
        return Err(SamplingError::Width {
            expected: inst.n(),
            found: batch.n(),
        });
    }
    let tol = if inst.constraints_integral() {
        0.0
    } else {
        FEAS_TOL
    };
    Ok(map_indexed(batch.rows(), exec, |l| {
        let x = batch.row_f64(l);
        let v = feasibility_violation(inst, &x).expect("width checked");
        v.within(tol).then(|| objective_unchecked(inst, &x))
    }))
}

/// Updates `inc` with the best feasible row of `batch`. Among equal
/// objectives the lowest row index wins, and the incumbent changes only on
/// strict improvement. Returns whether it changed.
pub fn eval_best(
    batch: &SampleBatch,
    inst: &BipInstance,
    inc: &mut Incumbent,
    iter: u64,
    seconds: f64,
    exec: Execution,
) -> Result<bool, SamplingError> {
    let scores = evaluate_batch(batch, inst, exec)?;
    let mut best: Option<(usize, f64)> = None;
    for (l, z) in scores.iter().enumerate() {
        if let Some(z) = *z {
            if best.map_or(true, |(_, bz)| z < bz) {
                best = Some((l, z));
            }
        }
    }
    Ok(match best {
        Some((l, z)) => inc.offer(batch.row_f64(l), z, iter, seconds),
        None => false,
    })
}

/// Feasibility-checked single-point offer, used for final rounding.
pub fn offer_point(
    x: &[f64],
    inst: &BipInstance,
    inc: &mut Incumbent,
    iter: u64,
    seconds: f64,
) -> bool {
    if check_binary(inst.n(), x).is_err() {
        return false;
    }
    let batch = SampleBatch::from_bits(1, x.len(), x.iter().map(|&v| v as u8).collect());
    eval_best(&batch, inst, inc, iter, seconds, Execution::Sequential).unwrap_or(false)
}

/// `E[x]` under the product distribution with marginals `p`, by full
/// enumeration of `{0,1}^n`.
pub fn product_distribution_mean(p: &[f64]) -> Result<Vec<f64>, SamplingError> {
    let n = p.len();
    if n > MAX_ENUM_N {
        return Err(SamplingError::TooLarge { n, max: MAX_ENUM_N });
    }
    let p = validate_probabilities(p)?;
    let mut mean = vec![0.0; n];
    for mask in 0u32..(1u32 << n) {
        let prob: f64 = (0..n)
            .map(|i| if mask >> i & 1 == 1 { p[i] } else { 1.0 - p[i] })
            .product();
        for (i, m) in mean.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *m += prob;
            }
        }
    }
    Ok(mean)
}
