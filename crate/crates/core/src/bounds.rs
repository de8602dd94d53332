//! Lower bounds on the probability that a batch of `k` independent samples
//! contains a near-optimal point (`psi`) or a feasible point (`phi`).

use thiserror::Error;

use crate::linalg::norm_inf;
use crate::model::BipInstance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("bound needs mu <= delta / L_f, got mu = {mu} and delta / L_f = {ratio}")]
    NotApplicable { mu: f64, ratio: f64 },
    #[error("invalid bound input: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptBoundInput {
    /// Expected 1-norm distance of a sample from the optimum.
    pub mu: f64,
    /// Optimality tolerance.
    pub delta: f64,
    /// Lipschitz constant of the objective in the 1-norm.
    pub l_f: f64,
    pub k: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasBoundInput {
    /// `max(min_j <A_j, p> - b_j, 0)`.
    pub gamma_plus: f64,
    /// Largest row 2-norm of `A`.
    pub eta: f64,
    /// Number of inequality rows.
    pub m: usize,
    pub k: u64,
}

/// `1 - exp(k (t (1 - ln(t / mu)) - mu))` with `t = delta / L_f`.
pub fn psi_bound(inp: &OptBoundInput) -> Result<f64, BoundError> {
    let OptBoundInput { mu, delta, l_f, k } = *inp;
    if !(delta > 0.0 && l_f > 0.0) {
        return Err(BoundError::Invalid("delta and L_f must be positive"));
    }
    if !(mu >= 0.0) {
        return Err(BoundError::Invalid("mu must be nonnegative"));
    }
    let t = delta / l_f;
    if mu > t {
        return Err(BoundError::NotApplicable { mu, ratio: t });
    }
    if mu == 0.0 {
        return Ok(1.0);
    }
    let exponent = k as f64 * (t * (1.0 - (t / mu).ln()) - mu);
    Ok((1.0 - exponent.exp()).clamp(0.0, 1.0))
}

/// `1 - exp(-2k [gamma_+^2 / eta^2 - ln(m) / 2]_+)`.
pub fn phi_bound(inp: &FeasBoundInput) -> Result<f64, BoundError> {
    let FeasBoundInput {
        gamma_plus,
        eta,
        m,
        k,
    } = *inp;
    if !(eta > 0.0) || m == 0 {
        return Err(BoundError::Invalid("need eta > 0 and m >= 1"));
    }
    let g = gamma_plus.max(0.0);
    let bracket = (g * g / (eta * eta) - (m as f64).ln() / 2.0).max(0.0);
    Ok((1.0 - (-2.0 * k as f64 * bracket).exp()).clamp(0.0, 1.0))
}

/// `E ||x - x*||_1` for `x` drawn from the product distribution `p`.
pub fn expected_l1_distance(p: &[f64], x_star: &[f64]) -> f64 {
    p.iter()
        .zip(x_star)
        .map(|(&pi, &xi)| xi * (1.0 - pi) + (1.0 - xi) * pi)
        .sum()
}

/// 1-norm Lipschitz constant of the objective over the unit box:
/// `||c||_inf`, plus `2 max_i sum_j |Q_ij|` when quadratic.
pub fn lipschitz_l1(inst: &BipInstance) -> f64 {
    let lin = norm_inf(inst.c());
    if inst.is_linear() {
        lin
    } else {
        lin + 2.0 * inst.q().max_row_abs_sum()
    }
}

/// Inputs of both bounds at marginals `p`. The optimality part needs the
/// optimum `x_star` and a tolerance `delta`, and only the inequality block
/// enters the feasibility part.
pub fn bound_inputs_from_state(
    p: &[f64],
    inst: &BipInstance,
    x_star: Option<&[f64]>,
    delta: f64,
    k: u64,
) -> (Option<OptBoundInput>, FeasBoundInput) {
    if inst.m2() > 0 {
        log::warn!("equality rows are ignored by the feasibility bound");
    }
    let a = inst.ineq_matrix();
    let b = inst.ineq_rhs();
    let gamma = (0..a.n_rows())
        .map(|j| a.row_dot(j, p) - b[j])
        .fold(f64::INFINITY, f64::min);
    let gamma_plus = if gamma.is_finite() {
        gamma.max(0.0)
    } else {
        0.0
    };
    let eta = (0..a.n_rows())
        .map(|j| a.row_norm2(j))
        .fold(0.0f64, f64::max);
    let feas = FeasBoundInput {
        gamma_plus,
        eta,
        m: a.n_rows(),
        k,
    };
    let opt = x_star.map(|xs| OptBoundInput {
        mu: expected_l1_distance(p, xs),
        delta,
        l_f: lipschitz_l1(inst),
        k,
    });
    (opt, feas)
}
