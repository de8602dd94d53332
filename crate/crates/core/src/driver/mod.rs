//! The solve loop: PDHG steps on the preprocessed saddle form, periodic
//! sampling of binary candidates, incumbent tracking and halting.

mod bench;
mod config;

pub use bench::{bench, log2_group, quartiles, BenchReport, BenchRow, GroupRow};
pub use config::{ClockMode, SolveConfig, TuMode};

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{bound_inputs_from_state, phi_bound, psi_bound};
use crate::model::{build_saddle_form, is_feasible, preprocess, BipInstance, ModelError};
use crate::pdhg::{
    default_steps, point_indicators, residuals, Pdhg, PdhgError, SolverState, NAN_CHECK_EVERY,
};
use crate::sampling::{
    bernoulli_batch, cube_side, eval_best, monotone_relax, repair_hook_for, sample_assignment3d,
    Assign3dParams, Incumbent, RepairHook, SampleBatch, SamplerKind, SamplingError,
};
use crate::tu::{tu_from_meta, TuError, TuReform};

/// One line of the trace, written at every sampling trigger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: u64,
    pub wall_seconds: f64,
    pub rho: f64,
    pub sx_norm: f64,
    pub sy_norm: f64,
    pub primal_feas_gap: f64,
    pub binary_gap: f64,
    pub z_best: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Halted,
    TimeLimit,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub incumbent: Incumbent,
    pub trace: Vec<TraceRecord>,
    pub iterations: u64,
    pub sampling_rounds: u64,
    pub stop: StopReason,
    /// Seconds spent building the TU reformulation.
    pub tu_seconds: f64,
    /// Variables in the instance the iteration actually ran on.
    pub working_n: usize,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tu(#[from] TuError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Steps(PdhgError),
    #[error("iterates diverged at iteration {iter}")]
    Diverged {
        iter: u64,
        partial: Box<SolveOutcome>,
    },
}

struct Clock {
    mode: ClockMode,
    start: Instant,
}

impl Clock {
    fn seconds(&self, iter: u64) -> f64 {
        match self.mode {
            ClockMode::Wall => self.start.elapsed().as_secs_f64(),
            ClockMode::Virtual { tick } => iter as f64 * tick,
        }
    }
}

/// Everything needed to turn a working-space iterate into candidates for
/// the original instance.
struct CandidateMap<'a> {
    original: &'a BipInstance,
    tu: Option<TuReform>,
    hook: Option<RepairHook>,
    sampler: SamplerKind,
    assign: Option<Assign3dParams>,
}

impl CandidateMap<'_> {
    /// Maps a working-space binary row to an original-space candidate.
    fn to_original(&self, row: &[f64]) -> Option<Vec<f64>> {
        let x = match &self.tu {
            Some(t) => t.lift(row).ok()?,
            None => row.to_vec(),
        };
        match self.hook {
            Some(h) if !is_feasible(self.original, &x).unwrap_or(false) => {
                h.repair(self.original, &x)
            }
            _ => Some(x),
        }
    }

    fn full_point(&self, x: &[f64]) -> Vec<f64> {
        match &self.tu {
            Some(t) => t.lift_fractional(x),
            None => x.to_vec(),
        }
    }

    /// One round of `k_b` candidates in the original space.
    fn sample(
        &self,
        x: &[f64],
        cfg: &SolveConfig,
        lane_base: u64,
    ) -> Result<SampleBatch, SolveError> {
        let n = self.original.n();
        match (self.sampler, self.assign) {
            (SamplerKind::Assignment3d, Some(params)) => {
                let p = self.full_point(x);
                Ok(sample_assignment3d(
                    &p,
                    cfg.k_b,
                    params,
                    self.original.c(),
                    cfg.seed,
                    lane_base,
                    cfg.exec,
                )?)
            }
            _ => {
                let raw = bernoulli_batch(x, cfg.k_b, cfg.seed, lane_base, cfg.exec)?;
                if self.tu.is_none() && self.hook.is_none() {
                    return Ok(raw);
                }
                let mut bits = Vec::with_capacity(raw.rows() * n);
                let mut rows = 0;
                for l in 0..raw.rows() {
                    if let Some(full) = self.to_original(&raw.row_f64(l)) {
                        bits.extend(full.iter().map(|&v| v as u8));
                        rows += 1;
                    }
                }
                Ok(SampleBatch::from_bits(rows, n, bits))
            }
        }
    }
}

/// Entrywise nearest binary value, with ties at 0.5 going to 1.
pub fn round_binary(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| if v >= 0.5 { 1.0 } else { 0.0 })
        .collect()
}

fn resolve_sampler(
    inst: &BipInstance,
    cfg: &SolveConfig,
) -> Result<(SamplerKind, Option<Assign3dParams>), SolveError> {
    let name = cfg.sampler.clone().or_else(|| inst.meta().sampler.clone());
    let kind = match name {
        Some(n) => SamplerKind::from_name(&n)?,
        None => SamplerKind::Bernoulli,
    };
    if kind != SamplerKind::Assignment3d {
        return Ok((kind, None));
    }
    let side = cube_side(inst.n()).filter(|&s| s > 0).ok_or_else(|| {
        SolveError::Config(format!(
            "assignment3d sampler needs n = side^3 variables, got {}",
            inst.n()
        ))
    })?;
    let mut params = Assign3dParams::with_defaults(side);
    if let Some(g) = cfg.assign_gamma {
        params.gamma = g;
    }
    if let Some(r) = cfg.assign_rounds {
        params.rounds = r;
    }
    Ok((kind, Some(params)))
}

/// Runs the solver with default trace handling (records are collected).
pub fn solve(inst: &BipInstance, cfg: &SolveConfig) -> Result<SolveOutcome, SolveError> {
    solve_with(inst, cfg, |_| {})
}

/// Runs the solver, passing each trace record to `sink` as it is produced.
pub fn solve_with<F>(
    inst: &BipInstance,
    cfg: &SolveConfig,
    mut sink: F,
) -> Result<SolveOutcome, SolveError>
where
    F: FnMut(&TraceRecord),
{
    cfg.validate().map_err(SolveError::Config)?;
    let clock = Clock {
        mode: cfg.clock,
        start: Instant::now(),
    };
    let steps = default_steps(cfg.sigma).map_err(SolveError::Steps)?;
    let (sampler, assign) = resolve_sampler(inst, cfg)?;

    let tu_start = Instant::now();
    let has_meta = inst.meta().tu_rows.is_some() && inst.meta().tu_cols.is_some();
    let tu = match cfg.tu {
        TuMode::Auto if has_meta => Some(tu_from_meta(inst)?),
        _ => None,
    };
    let tu_seconds = tu_start.elapsed().as_secs_f64();
    let mut work = tu
        .as_ref()
        .map_or_else(|| inst.clone(), |t| t.reduced().clone());
    let mut hook = None;
    if cfg.monotone {
        let (relaxed, _) = monotone_relax(&work);
        if relaxed != work {
            hook = repair_hook_for(inst);
            work = relaxed;
        }
    }
    let map = CandidateMap {
        original: inst,
        tu,
        hook,
        sampler,
        assign,
    };

    let sf = preprocess(&build_saddle_form(&work)?);
    let mut pdhg = Pdhg::new(&sf, steps);
    let mut st = SolverState::initial(sf.n(), sf.m());
    let mut sched = cfg.schedule();
    let mut halt = cfg.halt_state();
    st.rho = sched.update_penalty();

    let mut inc = Incumbent::default();
    let mut trace = Vec::new();
    let mut rounds: u64 = 0;
    let mut prev: Option<SolverState> = None;

    let outcome =
        |inc: Incumbent, trace: Vec<TraceRecord>, st: &SolverState, rounds, stop| SolveOutcome {
            incumbent: inc,
            trace,
            iterations: st.k as u64,
            sampling_rounds: rounds,
            stop,
            tu_seconds,
            working_n: sf.n(),
        };

    let stop = loop {
        let k = st.k as u64;
        if cfg.max_iter.is_some_and(|m| k >= m) {
            break StopReason::IterationLimit;
        }
        if k % NAN_CHECK_EVERY as u64 == 0 && clock.seconds(k) >= cfg.time_limit_seconds {
            break StopReason::TimeLimit;
        }
        if (k + 1) % cfg.k_int == 0 {
            prev = Some(st.clone());
        }
        if let Err(PdhgError::Divergence { iter }) = pdhg.step(&mut st) {
            let partial = outcome(inc, trace, &st, rounds, StopReason::Halted);
            return Err(SolveError::Diverged {
                iter: iter as u64,
                partial: Box::new(partial),
            });
        }
        let k = st.k as u64;
        if k % cfg.k_int != 0 {
            continue;
        }

        let mut improved = false;
        for _ in 0..cfg.k_r {
            let batch = map.sample(&st.x, cfg, rounds * cfg.k_b as u64)?;
            let now = clock.seconds(k);
            improved |= eval_best(&batch, inst, &mut inc, k, now, cfg.exec)?;
            rounds += 1;
        }
        let report = residuals(
            prev.as_ref().expect("saved before trigger"),
            &st,
            &sf,
            steps,
        );
        let halted = halt.check_halt(&report, improved);

        let (psi, phi) = if cfg.diagnostics {
            let p = map.full_point(&st.x);
            let (opt, feas) = bound_inputs_from_state(
                &p,
                inst,
                cfg.reference_optimum.as_deref(),
                cfg.bound_delta,
                cfg.k_b as u64,
            );
            (opt.and_then(|o| psi_bound(&o).ok()), phi_bound(&feas).ok())
        } else {
            (None, None)
        };
        let rec = TraceRecord {
            iter: k,
            wall_seconds: clock.seconds(k),
            rho: st.rho,
            sx_norm: report.sx_norm,
            sy_norm: report.sy_norm,
            primal_feas_gap: report.primal_feas_gap,
            binary_gap: report.binary_gap,
            z_best: inc.is_some().then_some(inc.z_best),
            psi,
            phi,
        };
        sink(&rec);
        trace.push(rec);

        if halted {
            break StopReason::Halted;
        }
        if clock.seconds(k) >= cfg.time_limit_seconds {
            break StopReason::TimeLimit;
        }
        st.rho = sched.update_penalty();
    };

    // Final rounding; a record is added when it improves the incumbent so
    // the last z_best change always appears in the trace.
    let k = st.k as u64;
    if let Some(x) = map.to_original(&round_binary(&st.x)) {
        let batch = SampleBatch::from_bits(1, x.len(), x.iter().map(|&v| v as u8).collect());
        let now = clock.seconds(k);
        if eval_best(&batch, inst, &mut inc, k, now, cfg.exec)? {
            let report = match &prev {
                Some(p) if p.k + 1 == st.k => residuals(p, &st, &sf, steps),
                _ => point_indicators(&sf, &st.x),
            };
            let rec = TraceRecord {
                iter: k,
                wall_seconds: now,
                rho: st.rho,
                sx_norm: report.sx_norm,
                sy_norm: report.sy_norm,
                primal_feas_gap: report.primal_feas_gap,
                binary_gap: report.binary_gap,
                z_best: Some(inc.z_best),
                psi: None,
                phi: None,
            };
            sink(&rec);
            trace.push(rec);
        }
    }
    Ok(outcome(inc, trace, &st, rounds, stop))
}

#[cfg(test)]
mod tests;
