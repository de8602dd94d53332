//! Post-hoc checks: convex-case convergence certificates, the raw
//! nonconvex residual bound, and Monte-Carlo validation of the sampling
//! probability bounds. Reports serialize to CSV.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{bound_inputs_from_state, phi_bound, psi_bound};
use crate::exec::{map_indexed, Execution};
use crate::instances::{brute_force, InstanceError};
use crate::linalg::{dot, norm2, spectral_norm_default};
use crate::model::{objective_unchecked, BipInstance, SaddleForm, FEAS_TOL};
use crate::pdhg::{
    certificate_terms, default_steps, lagrangian, residuals, CertificateTerms, Pdhg, PdhgError,
    SolverState, StepSizes,
};
use crate::sampling::{bernoulli_batch, SamplingError};

/// Relative slack allowed before an envelope counts as violated.
pub const ENVELOPE_SLACK: f64 = 0.05;

/// Largest `n` accepted by [`bound_validation`].
pub const BOUND_VALIDATION_MAX_N: usize = 12;

/// Largest `n` for the dense convexity test.
pub const CONVEXITY_MAX_N: usize = 4096;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("certificate check needs a convex run: Q - rho I is not positive semidefinite")]
    Nonconvex,
    #[error("certificate check needs a reference saddle point")]
    MissingReference,
    #[error("{what} has length {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("horizon N = {n} outside 1..={available}")]
    Horizon { n: usize, available: usize },
    #[error("n = {n} exceeds the limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error(transparent)]
    Pdhg(#[from] PdhgError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Quantities recorded for step `k` (from iterate `k-1` to `k`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub terms: CertificateTerms,
    pub sx_norm: f64,
    pub sy_norm: f64,
    /// `||x_{k-1}||^2`
    pub x_prev_sq: f64,
    /// Saddle value at `(x_k, y_k)`.
    pub phi: f64,
}

/// Runs `iters` steps from `start` at fixed penalty `start.rho` and records
/// every step.
pub fn record_steps(
    sf: &SaddleForm,
    steps: StepSizes,
    start: SolverState,
    iters: usize,
) -> Result<Vec<StepRecord>, PdhgError> {
    let mut pdhg = Pdhg::new(sf, steps);
    let mut cur = start;
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        let prev = cur.clone();
        pdhg.step(&mut cur)?;
        let res = residuals(&prev, &cur, sf, steps);
        out.push(StepRecord {
            terms: certificate_terms(&prev, &cur, sf, steps),
            sx_norm: res.sx_norm,
            sy_norm: res.sy_norm,
            x_prev_sq: dot(&prev.x, &prev.x),
            phi: lagrangian(sf, &cur.x, &cur.y, cur.rho),
        });
    }
    if out.iter().any(|r| !r.phi.is_finite()) {
        return Err(PdhgError::Divergence { iter: cur.k });
    }
    Ok(out)
}

/// Approximate saddle point of the unpenalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `||z - T(z)||` for the averaged point `z` and one PDHG step `T`.
    pub fixed_point_residual: f64,
}

/// Runs `iters` PDHG steps at `rho = 0` with `tau1 = tau2 = sqrt(sigma)`
/// from the standard start and averages the last `average_last` iterates.
pub fn reference_saddle_point(
    sf: &SaddleForm,
    sigma: f64,
    iters: usize,
    average_last: usize,
) -> Result<ReferencePoint, PdhgError> {
    let steps = default_steps(sigma)?;
    let mut pdhg = Pdhg::new(sf, steps);
    let mut st = SolverState::initial(sf.n(), sf.m());
    let avg_from = iters.saturating_sub(average_last.max(1));
    let mut sx = vec![0.0; sf.n()];
    let mut sy = vec![0.0; sf.m()];
    let mut count = 0usize;
    for k in 0..iters {
        pdhg.step(&mut st)?;
        if k >= avg_from {
            sx.iter_mut().zip(&st.x).for_each(|(a, b)| *a += b);
            sy.iter_mut().zip(&st.y).for_each(|(a, b)| *a += b);
            count += 1;
        }
    }
    if count == 0 {
        sx.clone_from(&st.x);
        sy.clone_from(&st.y);
        count = 1;
    }
    let x: Vec<f64> = sx.iter().map(|v| v / count as f64).collect();
    let y: Vec<f64> = sy.iter().map(|v| v / count as f64).collect();
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(PdhgError::Divergence { iter: iters });
    }

    let mut probe = SolverState::from_point(x.clone(), y.clone());
    pdhg.step(&mut probe)?;
    let diff: Vec<f64> = probe
        .x
        .iter()
        .zip(&x)
        .chain(probe.y.iter().zip(&y))
        .map(|(a, b)| a - b)
        .collect();
    Ok(ReferencePoint {
        x,
        y,
        fixed_point_residual: norm2(&diff),
    })
}

/// One horizon of the convex certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertRow {
    #[serde(rename = "N")]
    pub n: usize,
    /// Argmin step of the combined residual over `1..=N`.
    pub k0: usize,
    pub min_combined_residual: f64,
    /// `Delta0 / N`
    pub combined_bound: f64,
    pub rx_at_k0: f64,
    /// `2 sqrt(Delta0) / sqrt(tau1 N)`
    pub envelope_rx: f64,
    pub ry_at_k0: f64,
    /// `sqrt(3 Delta0) / sqrt(tau2 N)`
    pub envelope_ry: f64,
    pub epsilon_at_k0: f64,
    /// `Delta0 / (2N)`
    pub epsilon_bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub delta0: f64,
    pub rows: Vec<CertRow>,
    /// Rows with at least one envelope exceeded beyond the slack.
    pub violations: usize,
    /// Steps with `eps_k > ||x_k - x_{k-1}||^2 / (8 tau1)` beyond the slack.
    pub per_step_epsilon_violations: usize,
}

impl CertReport {
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        rows_to_csv(&self.rows)
    }
}

/// `||x* - x0||^2 / (2 tau1) + ||y* - y0||^2 / (2 tau2)`.
pub fn initial_distance(
    steps: StepSizes,
    x0: &[f64],
    y0: &[f64],
    x_star: &[f64],
    y_star: &[f64],
) -> f64 {
    let dx = sq_dist(x_star, x0);
    let dy = sq_dist(y_star, y0);
    dx / (2.0 * steps.tau1) + dy / (2.0 * steps.tau2)
}

/// Envelopes `(rx, ry, eps, combined)` for horizon `n`.
pub fn envelopes(delta0: f64, steps: StepSizes, n: usize) -> (f64, f64, f64, f64) {
    let nf = n as f64;
    (
        2.0 * delta0.sqrt() / (steps.tau1 * nf).sqrt(),
        (3.0 * delta0).sqrt() / (steps.tau2 * nf).sqrt(),
        delta0 / (2.0 * nf),
        delta0 / nf,
    )
}

/// Checks the convex-case envelopes on the recorded steps for every
/// horizon in `grid`. `records[k-1]` must describe step `k` of a run started
/// at `(x0, y0)` with penalty `rho`.
#[allow(clippy::too_many_arguments)]
pub fn certificate_check(
    records: &[StepRecord],
    sf: &SaddleForm,
    steps: StepSizes,
    rho: f64,
    x0: &[f64],
    y0: &[f64],
    reference: Option<&ReferencePoint>,
    grid: &[usize],
) -> Result<CertReport, DiagnosticsError> {
    if !is_convex(sf, rho)? {
        return Err(DiagnosticsError::Nonconvex);
    }
    let reference = reference.ok_or(DiagnosticsError::MissingReference)?;
    check_len("x0", sf.n(), x0.len())?;
    check_len("y0", sf.m(), y0.len())?;
    check_len("x_star", sf.n(), reference.x.len())?;
    check_len("y_star", sf.m(), reference.y.len())?;

    let delta0 = initial_distance(steps, x0, y0, &reference.x, &reference.y);
    let within = |v: f64, bound: f64| v <= bound * (1.0 + ENVELOPE_SLACK) + 1e-12;

    let mut rows = Vec::with_capacity(grid.len());
    for &n in grid {
        if n == 0 || n > records.len() {
            return Err(DiagnosticsError::Horizon {
                n,
                available: records.len(),
            });
        }
        let (i0, best) =
            records[..n]
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |(bi, bv), (i, r)| {
                    if r.terms.combined < bv {
                        (i, r.terms.combined)
                    } else {
                        (bi, bv)
                    }
                });
        let t = records[i0].terms;
        let (env_rx, env_ry, env_eps, env_comb) = envelopes(delta0, steps, n);
        let violated = !(within(best, env_comb)
            && within(t.rx_norm, env_rx)
            && within(t.ry_norm, env_ry)
            && within(t.epsilon, env_eps));
        rows.push(CertRow {
            n,
            k0: i0 + 1,
            min_combined_residual: best,
            combined_bound: env_comb,
            rx_at_k0: t.rx_norm,
            envelope_rx: env_rx,
            ry_at_k0: t.ry_norm,
            envelope_ry: env_ry,
            epsilon_at_k0: t.epsilon,
            epsilon_bound: env_eps,
            violated,
        });
    }
    let per_step_epsilon_violations = records
        .iter()
        .filter(|r| {
            !within(
                r.terms.epsilon,
                r.terms.dx_norm.powi(2) / (8.0 * steps.tau1),
            )
        })
        .count();
    Ok(CertReport {
        delta0,
        violations: rows.iter().filter(|r| r.violated).count(),
        rows,
        per_step_epsilon_violations,
    })
}

/// Both sides of the nonconvex residual bound for one horizon. No pass or
/// fail is attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakRow {
    #[serde(rename = "N")]
    pub n: usize,
    /// `min_{k <= N} ||s_x|| + ||s_y||`
    pub min_residual: f64,
    pub rhs: f64,
    /// Lower bound on the saddle value used in `rhs`.
    pub phi_lower: f64,
}

/// Evaluates
///
/// ```text
/// 2 [(2||K|| + 3/(2 tau1))^2 tau1 + 1/tau2]^(1/2)
///   [(Phi0 - Phi_low)/N + 2/(tau1 N) sum_{k<=N} ||x_{k-1}||^2 + 4 tau2 ||r||^2]^(1/2)
/// ```
///
/// with `Phi_low` the smallest saddle value seen on the whole record
/// (including `phi0`).
pub fn weak_convex_rows(
    records: &[StepRecord],
    sf: &SaddleForm,
    steps: StepSizes,
    phi0: f64,
    grid: &[usize],
) -> Result<Vec<WeakRow>, DiagnosticsError> {
    let StepSizes { tau1, tau2, .. } = steps;
    let k_norm = spectral_norm_default(&sf.k);
    let r_sq = dot(&sf.r, &sf.r);
    let phi_lower = records.iter().map(|r| r.phi).fold(phi0, f64::min);
    let lead = 2.0 * ((2.0 * k_norm + 1.5 / tau1).powi(2) * tau1 + 1.0 / tau2).sqrt();
    let mut out = Vec::with_capacity(grid.len());
    for &n in grid {
        if n == 0 || n > records.len() {
            return Err(DiagnosticsError::Horizon {
                n,
                available: records.len(),
            });
        }
        let nf = n as f64;
        let x_sum: f64 = records[..n].iter().map(|r| r.x_prev_sq).sum();
        let min_residual = records[..n]
            .iter()
            .map(|r| r.sx_norm + r.sy_norm)
            .fold(f64::INFINITY, f64::min);
        let inner = (phi0 - phi_lower) / nf + 2.0 / (tau1 * nf) * x_sum + 4.0 * tau2 * r_sq;
        out.push(WeakRow {
            n,
            min_residual,
            rhs: lead * inner.max(0.0).sqrt(),
            phi_lower,
        });
    }
    Ok(out)
}

/// Whether `Q - rho I` is positive semidefinite, by a dense Cholesky with a
/// small diagonal shift.
pub fn is_convex(sf: &SaddleForm, rho: f64) -> Result<bool, DiagnosticsError> {
    let n = sf.n();
    if sf.q.is_empty() {
        return Ok(rho <= 0.0);
    }
    if n > CONVEXITY_MAX_N {
        return Err(DiagnosticsError::TooLarge {
            n,
            max: CONVEXITY_MAX_N,
        });
    }
    let mut a = sf.q.to_dense();
    let scale = sf.q.max_row_abs_sum().max(rho.abs()).max(1.0);
    let shift = 1e-10 * scale;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += shift - rho;
    }
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if !(d > 0.0) {
            return Ok(false);
        }
        let l = d.sqrt();
        a[j][j] = l;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / l;
        }
    }
    Ok(true)
}

/// Empirical and theoretical success probabilities at one marginal vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub entry: usize,
    pub k: u64,
    /// Fraction of batches with a row satisfying `Ax >= b`.
    pub empirical_feasible: f64,
    pub phi: Option<f64>,
    /// Fraction of batches with a row of objective `<= z* + delta`.
    pub empirical_optimal: Option<f64>,
    pub psi: Option<f64>,
    /// Smallest `empirical - bound` over the bounds that apply.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub z_opt: Option<f64>,
    pub rows: Vec<BoundRow>,
    pub min_margin: Option<f64>,
}

impl BoundReport {
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        rows_to_csv(&self.rows)
    }
}

/// Monte-Carlo check of both sampling bounds. For each `p` in `schedule`,
/// draws `trials` batches of `k` rows (trial `t` uses lanes starting at
/// `t k`) and counts batches that contain an inequality-feasible row and a
/// `delta`-optimal row. The optimality side is skipped when the instance is
/// infeasible, and a bound is left out when its preconditions fail.
#[allow(clippy::too_many_arguments)]
pub fn bound_validation(
    inst: &BipInstance,
    schedule: &[Vec<f64>],
    k: usize,
    trials: usize,
    delta: f64,
    seed: u64,
    exec: Execution,
) -> Result<BoundReport, DiagnosticsError> {
    let n = inst.n();
    if n > BOUND_VALIDATION_MAX_N {
        return Err(DiagnosticsError::TooLarge {
            n,
            max: BOUND_VALIDATION_MAX_N,
        });
    }
    let optimum = brute_force(inst, exec)?.optimal().cloned();
    let z_opt = optimum.as_ref().map(|o| o.z_opt);
    let x_star = optimum.as_ref().map(|o| o.x_opt.clone());
    let tol = if inst.constraints_integral() {
        0.0
    } else {
        FEAS_TOL
    };
    let a = inst.ineq_matrix();
    let b = inst.ineq_rhs();
    let ineq_ok = |x: &[f64]| (0..a.n_rows()).all(|j| a.row_dot(j, x) >= b[j] - tol);

    let mut rows = Vec::with_capacity(schedule.len());
    for (entry, p) in schedule.iter().enumerate() {
        check_len("p", n, p.len())?;
        let hits = map_indexed(trials, exec, |t| -> Result<(bool, bool), SamplingError> {
            let batch = bernoulli_batch(p, k, seed, (t * k) as u64, Execution::Sequential)?;
            let mut feas = false;
            let mut opt = false;
            for l in 0..batch.rows() {
                let x = batch.row_f64(l);
                feas |= ineq_ok(&x);
                if let Some(z) = z_opt {
                    let f = objective_unchecked(inst, &x);
                    opt |= f <= z + delta + 1e-9 * (1.0 + z.abs());
                }
            }
            Ok((feas, opt))
        });
        let hits = hits.into_iter().collect::<Result<Vec<_>, _>>()?;
        let denom = trials.max(1) as f64;
        let empirical_feasible = hits.iter().filter(|h| h.0).count() as f64 / denom;
        let empirical_optimal = z_opt.map(|_| hits.iter().filter(|h| h.1).count() as f64 / denom);

        let (opt_in, feas_in) =
            bound_inputs_from_state(p, inst, x_star.as_deref(), delta, k as u64);
        let phi = phi_bound(&feas_in).ok();
        let psi = opt_in.and_then(|o| psi_bound(&o).ok());
        let margins = [
            phi.map(|v| empirical_feasible - v),
            psi.zip(empirical_optimal).map(|(v, e)| e - v),
        ];
        let margin = margins.iter().flatten().copied().reduce(f64::min);
        rows.push(BoundRow {
            entry,
            k: k as u64,
            empirical_feasible,
            phi,
            empirical_optimal,
            psi,
            margin,
        });
    }
    let min_margin = rows.iter().filter_map(|r| r.margin).reduce(f64::min);
    Ok(BoundReport {
        z_opt,
        rows,
        min_margin,
    })
}

/// Serializes rows with a header taken from the field names.
pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8"))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), DiagnosticsError> {
    if expected == found {
        Ok(())
    } else {
        Err(DiagnosticsError::Dimension {
            what,
            expected,
            found,
        })
    }
}

#[cfg(test)]
mod tests;
