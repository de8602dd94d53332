use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::schedule::{HaltState, PenaltySchedule};

/// Whether to apply the TU elimination carried in instance metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TuMode {
    #[default]
    Auto,
    Off,
}

/// Time source for trace timestamps and the time limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    /// Elapsed wall time since the solve started.
    #[default]
    Wall,
    /// `iterations * tick` seconds; makes traces reproducible byte for byte.
    Virtual { tick: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub sigma: f64,
    /// Iterations between sampling triggers.
    pub k_int: u64,
    /// Sampling rounds per trigger.
    pub k_r: u64,
    /// Samples per round.
    pub k_b: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub growth_t: f64,
    pub growth_p: f64,
    pub rho_delta: f64,
    pub tol: f64,
    pub stall_window: usize,
    pub stall_rel_change: f64,
    pub time_limit_seconds: f64,
    /// Optional cap on PDHG iterations.
    pub max_iter: Option<u64>,
    pub seed: u64,
    pub tu: TuMode,
    /// Sampler override; `None` uses the instance's hint, else Bernoulli.
    pub sampler: Option<String>,
    /// Relax sign-uniform equality blocks to inequalities and repair.
    pub monotone: bool,
    /// Parameters of the 3D-assignment sampler; `None` uses its defaults.
    pub assign_gamma: Option<f64>,
    pub assign_rounds: Option<usize>,
    /// Emit probability bounds in the trace.
    pub diagnostics: bool,
    /// Optimum used for the optimality bound when diagnostics are on.
    pub reference_optimum: Option<Vec<f64>>,
    /// Optimality tolerance used by the optimality bound.
    pub bound_delta: f64,
    pub clock: ClockMode,
    pub exec: Execution,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let p = PenaltySchedule::default();
        let h = HaltState::default();
        SolveConfig {
            sigma: 0.99,
            k_int: 10,
            k_r: 1,
            k_b: 128,
            rho_min: p.rho_min,
            rho_max: p.rho_max,
            growth_t: p.growth_t,
            growth_p: p.growth_p,
            rho_delta: p.delta,
            tol: h.tol_primal,
            stall_window: h.stall_window,
            stall_rel_change: h.stall_rel_change,
            time_limit_seconds: 1800.0,
            max_iter: None,
            seed: 0,
            tu: TuMode::Auto,
            sampler: None,
            monotone: false,
            assign_gamma: None,
            assign_rounds: None,
            diagnostics: false,
            reference_optimum: None,
            bound_delta: 1.0,
            clock: ClockMode::Wall,
            exec: Execution::default(),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k_int == 0 || self.k_r == 0 || self.k_b == 0 {
            return Err("k_int, k_r and the batch size must be >= 1".into());
        }
        if !(self.time_limit_seconds > 0.0) {
            return Err(format!(
                "time limit must be positive, got {}",
                self.time_limit_seconds
            ));
        }
        if !(self.tol >= 0.0) {
            return Err("tolerance must be nonnegative".into());
        }
        if let ClockMode::Virtual { tick } = self.clock {
            if !(tick > 0.0 && tick.is_finite()) {
                return Err("virtual clock tick must be positive".into());
            }
        }
        self.schedule().validate()
    }

    pub fn schedule(&self) -> PenaltySchedule {
        PenaltySchedule::new(
            self.rho_min,
            self.rho_max,
            self.growth_t,
            self.growth_p,
            self.rho_delta,
        )
    }

    pub fn halt_state(&self) -> HaltState {
        HaltState::new(
            self.tol,
            self.tol,
            self.tol,
            self.stall_window,
            self.stall_rel_change,
        )
    }
}
