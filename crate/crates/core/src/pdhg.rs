//! Primal-dual hybrid gradient iteration on the penalized saddle form
//!
//! `L(x; y) = <x,Qx> + <c,x> + <y, Kx + r> + rho <x, 1 - x>`
//!
//! over `x in [0,1]^n`, with the first `m1` dual entries constrained to be
//! nonnegative and the remaining equality duals free. Also computes the
//! near-stationarity residuals and the convex-case certificate terms.

use thiserror::Error;

use crate::linalg::{dot, norm2, norm_inf};
use crate::model::SaddleForm;

/// Smallest admissible `sigma`.
pub const MIN_SIGMA: f64 = 1e-6;

/// How often iterates are checked for NaN.
pub const NAN_CHECK_EVERY: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdhgError {
    #[error("sigma must lie in [{MIN_SIGMA}, 1), got {0}")]
    InvalidSigma(f64),
    #[error("step sizes must be positive, got tau1 = {tau1}, tau2 = {tau2}")]
    InvalidSteps { tau1: f64, tau2: f64 },
    #[error("iterates diverged (non-finite value) at iteration {iter}")]
    Divergence { iter: usize },
}

/// Primal and dual step sizes with `tau1 * tau2 <= sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub tau1: f64,
    pub tau2: f64,
    pub sigma: f64,
}

impl StepSizes {
    /// Explicit steps; `sigma` is set to their product.
    pub fn new(tau1: f64, tau2: f64) -> Result<Self, PdhgError> {
        if !(tau1 > 0.0 && tau2 > 0.0 && tau1.is_finite() && tau2.is_finite()) {
            return Err(PdhgError::InvalidSteps { tau1, tau2 });
        }
        Ok(StepSizes {
            tau1,
            tau2,
            sigma: tau1 * tau2,
        })
    }
}

/// Symmetric steps `tau1 = tau2 = sqrt(sigma)`, valid once `||K|| = 1`.
pub fn default_steps(sigma: f64) -> Result<StepSizes, PdhgError> {
    if !(MIN_SIGMA..1.0).contains(&sigma) {
        return Err(PdhgError::InvalidSigma(sigma));
    }
    let t = sigma.sqrt();
    Ok(StepSizes {
        tau1: t,
        tau2: t,
        sigma,
    })
}

/// PDHG iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub x_prev: Vec<f64>,
    /// Extrapolated primal point `2 x - x_prev`.
    pub x_bar: Vec<f64>,
    pub y: Vec<f64>,
    pub rho: f64,
    /// Number of completed steps.
    pub k: usize,
}

impl SolverState {
    /// `x0 = 0.5 * 1`, `y0 = 0`, `x_prev = x_bar = x0`.
    pub fn initial(n: usize, m: usize) -> Self {
        Self::from_point(vec![0.5; n], vec![0.0; m])
    }

    pub fn from_point(x: Vec<f64>, y: Vec<f64>) -> Self {
        SolverState {
            x_prev: x.clone(),
            x_bar: x.clone(),
            x,
            y,
            rho: 0.0,
            k: 0,
        }
    }

    fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

/// Reusable PDHG stepper holding scratch buffers.
pub struct Pdhg<'a> {
    sf: &'a SaddleForm,
    steps: StepSizes,
    kx: Vec<f64>,
    kty: Vec<f64>,
    qx: Vec<f64>,
    x_new: Vec<f64>,
}

impl<'a> Pdhg<'a> {
    pub fn new(sf: &'a SaddleForm, steps: StepSizes) -> Self {
        let n = sf.n();
        Pdhg {
            sf,
            steps,
            kx: vec![0.0; sf.m()],
            kty: vec![0.0; n],
            qx: vec![0.0; n],
            x_new: vec![0.0; n],
        }
    }

    pub fn steps(&self) -> StepSizes {
        self.steps
    }

    /// One update:
    ///
    /// ```text
    /// y+    = proj(y + tau2 (K x_bar + r))
    /// delta = c + rho + K^T y+ + 2 Q x - 2 rho x
    /// x+    = clamp01(x - tau1 delta)
    /// x_bar = 2 x+ - x
    /// ```
    pub fn step(&mut self, st: &mut SolverState) -> Result<(), PdhgError> {
        let sf = self.sf;
        let StepSizes { tau1, tau2, .. } = self.steps;

        sf.k.spmv_into(&st.x_bar, &mut self.kx).expect("sized");
        for (j, yj) in st.y.iter_mut().enumerate() {
            let v = *yj + tau2 * (self.kx[j] + sf.r[j]);
            *yj = if j < sf.m1 { v.max(0.0) } else { v };
        }

        sf.k.spmv_t_into(&st.y, &mut self.kty).expect("sized");
        let quadratic = !sf.q.is_empty();
        if quadratic {
            sf.q.spmv_into(&st.x, &mut self.qx).expect("sized");
        }
        let rho = st.rho;
        for i in 0..st.x.len() {
            let xi = st.x[i];
            let q_term = if quadratic { 2.0 * self.qx[i] } else { 0.0 };
            let delta = sf.c[i] + rho + self.kty[i] + q_term - 2.0 * rho * xi;
            self.x_new[i] = (xi - tau1 * delta).clamp(0.0, 1.0);
        }

        std::mem::swap(&mut st.x_prev, &mut st.x);
        st.x.copy_from_slice(&self.x_new);
        for i in 0..st.x.len() {
            st.x_bar[i] = 2.0 * st.x[i] - st.x_prev[i];
        }
        st.k += 1;

        if st.k % NAN_CHECK_EVERY == 0 && !st.is_finite() {
            return Err(PdhgError::Divergence { iter: st.k });
        }
        Ok(())
    }
}

/// Pure single step: returns the successor of `state`.
pub fn first_order_step(
    state: &SolverState,
    sf: &SaddleForm,
    steps: StepSizes,
) -> Result<SolverState, PdhgError> {
    let mut next = state.clone();
    Pdhg::new(sf, steps).step(&mut next)?;
    Ok(next)
}

/// `L(x; y)` including the binary-gap penalty.
pub fn lagrangian(sf: &SaddleForm, x: &[f64], y: &[f64], rho: f64) -> f64 {
    let kx = sf.k.spmv(x).expect("sized");
    let coupling: f64 = y
        .iter()
        .zip(kx.iter().zip(&sf.r))
        .map(|(yj, (a, b))| yj * (a + b))
        .sum();
    let gap: f64 = x.iter().map(|v| v * (1.0 - v)).sum();
    sf.objective(x) + coupling + rho * gap
}

/// `grad_x L = c + rho + K^T y + 2 Q x - 2 rho x`.
pub fn grad_x(sf: &SaddleForm, x: &[f64], y: &[f64], rho: f64) -> Vec<f64> {
    let kty = sf.k.spmv_t(y).expect("sized");
    let qx = sf.q.spmv(x).expect("sized");
    (0..x.len())
        .map(|i| sf.c[i] + rho + kty[i] + 2.0 * qx[i] - 2.0 * rho * x[i])
        .collect()
}

/// `grad_y L = K x + r`.
pub fn grad_y(sf: &SaddleForm, x: &[f64]) -> Vec<f64> {
    let mut g = sf.k.spmv(x).expect("sized");
    g.iter_mut().zip(&sf.r).for_each(|(a, b)| *a += b);
    g
}

/// Residual indicators for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// `||s_x||` with `s_x = (x_prev - x)/tau1 + grad_x L(x,y) - grad_x L(x_prev,y)`.
    pub sx_norm: f64,
    /// `||s_y||` with `s_y = (y_prev - y)/tau2 - (K x + r) + (K x_bar_prev + r)`.
    pub sy_norm: f64,
    /// Inequality violation (inf-norm of positive part) plus equality residual.
    pub primal_feas_gap: f64,
    /// `<x, 1 - x> / n`.
    pub binary_gap: f64,
}

impl ResidualReport {
    /// Combined near-stationarity measure `||s_x|| + ||s_y||`.
    pub fn dual_gap(&self) -> f64 {
        self.sx_norm + self.sy_norm
    }
}

/// Residuals of `cur`, which must follow `prev` by exactly one step.
pub fn residuals(
    prev: &SolverState,
    cur: &SolverState,
    sf: &SaddleForm,
    steps: StepSizes,
) -> ResidualReport {
    let n = cur.x.len();
    let rho = cur.rho;
    // The c and K^T y terms cancel in the gradient difference.
    let dx: Vec<f64> = cur.x.iter().zip(&prev.x).map(|(a, b)| a - b).collect();
    let qdx = sf.q.spmv(&dx).expect("sized");
    let sx: Vec<f64> = (0..n)
        .map(|i| -dx[i] / steps.tau1 + 2.0 * qdx[i] - 2.0 * rho * dx[i])
        .collect();

    let diff: Vec<f64> = prev.x_bar.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
    let kdiff = sf.k.spmv(&diff).expect("sized");
    let sy: Vec<f64> = (0..cur.y.len())
        .map(|j| (prev.y[j] - cur.y[j]) / steps.tau2 + kdiff[j])
        .collect();

    let ResidualReport {
        primal_feas_gap,
        binary_gap,
        ..
    } = point_indicators(sf, &cur.x);
    ResidualReport {
        sx_norm: norm2(&sx),
        sy_norm: norm2(&sy),
        primal_feas_gap,
        binary_gap,
    }
}

/// Primal feasibility gap and binary gap of a single point (the residual
/// norms are left at zero).
pub fn point_indicators(sf: &SaddleForm, x: &[f64]) -> ResidualReport {
    let g = grad_y(sf, x);
    let ineq = g[..sf.m1].iter().fold(0.0f64, |m, v| m.max(*v));
    let eq = norm_inf(&g[sf.m1..]);
    let n = x.len();
    let binary_gap = if n == 0 {
        0.0
    } else {
        x.iter().map(|v| v * (1.0 - v)).sum::<f64>() / n as f64
    };
    ResidualReport {
        sx_norm: 0.0,
        sy_norm: 0.0,
        primal_feas_gap: ineq + eq,
        binary_gap,
    }
}

/// Convex-case certificate quantities of step `k` (from `prev` = step
/// `k-1` to `cur` = step `k`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateTerms {
    /// `||x_k - x_{k-1}||`
    pub dx_norm: f64,
    /// `||y_k - y_{k-1}||`
    pub dy_norm: f64,
    /// `||y_k - yhat_{k-1}||` with `yhat_k = y_k + tau2 K (x_bar_k - x_k)`
    pub dy_aux_norm: f64,
    /// `||x_k - x_{k-1}||^2 / (4 tau1) + ||y_k - yhat_{k-1}||^2 / (2 tau2)`
    pub combined: f64,
    /// `||(x_{k-1} - x_k) / tau1||`
    pub rx_norm: f64,
    /// `||(yhat_{k-1} - yhat_k) / tau2||`
    pub ry_norm: f64,
    /// Linearization error `L(x_k, y_k) - l(x_k; x_{k-1})`.
    pub epsilon: f64,
}

/// Auxiliary dual point `y + tau2 K (x_bar - x)`.
pub fn aux_dual(sf: &SaddleForm, st: &SolverState, tau2: f64) -> Vec<f64> {
    let diff: Vec<f64> = st.x_bar.iter().zip(&st.x).map(|(a, b)| a - b).collect();
    let kd = sf.k.spmv(&diff).expect("sized");
    st.y.iter().zip(&kd).map(|(y, v)| y + tau2 * v).collect()
}

pub fn certificate_terms(
    prev: &SolverState,
    cur: &SolverState,
    sf: &SaddleForm,
    steps: StepSizes,
) -> CertificateTerms {
    let StepSizes { tau1, tau2, .. } = steps;
    let rho = cur.rho;
    let dx: Vec<f64> = cur.x.iter().zip(&prev.x).map(|(a, b)| a - b).collect();
    let dy: Vec<f64> = cur.y.iter().zip(&prev.y).map(|(a, b)| a - b).collect();
    let aux_prev = aux_dual(sf, prev, tau2);
    let aux_cur = aux_dual(sf, cur, tau2);
    let dy_aux: Vec<f64> = cur.y.iter().zip(&aux_prev).map(|(a, b)| a - b).collect();
    let d_aux: Vec<f64> = aux_prev.iter().zip(&aux_cur).map(|(a, b)| a - b).collect();

    let dx_norm = norm2(&dx);
    let dy_aux_norm = norm2(&dy_aux);
    let lin = lagrangian(sf, &prev.x, &cur.y, rho) + dot(&grad_x(sf, &prev.x, &cur.y, rho), &dx);
    let epsilon = lagrangian(sf, &cur.x, &cur.y, rho) - lin;
    CertificateTerms {
        dx_norm,
        dy_norm: norm2(&dy),
        dy_aux_norm,
        combined: dx_norm * dx_norm / (4.0 * tau1) + dy_aux_norm * dy_aux_norm / (2.0 * tau2),
        rx_norm: dx_norm / tau1,
        ry_norm: norm2(&d_aux) / tau2,
        epsilon,
    }
}
