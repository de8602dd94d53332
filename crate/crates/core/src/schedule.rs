//! Penalty growth schedule and halting logic.

use std::collections::VecDeque;

use crate::pdhg::ResidualReport;

/// Polynomial penalty growth with a minimum increment:
///
/// ```text
/// rho_tilde_n = rho_min (1 + n / T)^p
/// rho_n       = min(max(rho_tilde_n, rho_{n-1} + delta), rho_max)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySchedule {
    pub rho_min: f64,
    pub rho_max: f64,
    pub growth_t: f64,
    pub growth_p: f64,
    pub delta: f64,
    n: u64,
    rho_prev: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        PenaltySchedule::new(1e-3, 10.0, 100.0, 2.0, 1e-6)
    }
}

impl PenaltySchedule {
    /// `rho_prev` starts at `rho_min`.
    pub fn new(rho_min: f64, rho_max: f64, growth_t: f64, growth_p: f64, delta: f64) -> Self {
        PenaltySchedule {
            rho_min,
            rho_max,
            growth_t,
            growth_p,
            delta,
            n: 0,
            rho_prev: rho_min,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.rho_min > 0.0 && self.rho_max >= self.rho_min) {
            return Err(format!(
                "need 0 < rho_min <= rho_max, got {} and {}",
                self.rho_min, self.rho_max
            ));
        }
        if !(self.growth_t > 0.0 && self.growth_p > 0.0 && self.delta >= 0.0) {
            return Err("growth T and p must be positive and delta nonnegative".into());
        }
        Ok(())
    }

    /// Counter value used by the next update.
    pub fn counter(&self) -> u64 {
        self.n
    }

    pub fn current(&self) -> f64 {
        self.rho_prev
    }

    /// The unclipped value `rho_min (1 + n/T)^p` for counter `n`.
    pub fn target(&self, n: u64) -> f64 {
        self.rho_min * (1.0 + n as f64 / self.growth_t).powf(self.growth_p)
    }

    /// Emits the next penalty and advances the counter.
    pub fn update_penalty(&mut self) -> f64 {
        let tilde = self.target(self.n);
        let rho = tilde.max(self.rho_prev + self.delta).min(self.rho_max);
        self.n += 1;
        self.rho_prev = rho;
        rho
    }
}

/// Stopping rule over the primal gap, dual gap (`||s_x|| + ||s_y||`) and
/// binary gap, each of which must be within tolerance or stalled, combined
/// with a run of non-improving incumbent rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct HaltState {
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub tol_binary: f64,
    pub stall_window: usize,
    pub stall_rel_change: f64,
    primal: VecDeque<f64>,
    dual: VecDeque<f64>,
    binary: VecDeque<f64>,
    rounds_since_improved: usize,
}

impl Default for HaltState {
    fn default() -> Self {
        HaltState::new(1e-6, 1e-6, 1e-6, 50, 1e-8)
    }
}

impl HaltState {
    pub fn new(
        tol_primal: f64,
        tol_dual: f64,
        tol_binary: f64,
        stall_window: usize,
        stall_rel_change: f64,
    ) -> Self {
        HaltState {
            tol_primal,
            tol_dual,
            tol_binary,
            stall_window: stall_window.max(1),
            stall_rel_change,
            primal: VecDeque::new(),
            dual: VecDeque::new(),
            binary: VecDeque::new(),
            rounds_since_improved: 0,
        }
    }

    pub fn rounds_since_improved(&self) -> usize {
        self.rounds_since_improved
    }

    /// Records one sampling-trigger check and decides whether to halt.
    pub fn check_halt(&mut self, report: &ResidualReport, incumbent_improved: bool) -> bool {
        if incumbent_improved {
            self.rounds_since_improved = 0;
        } else {
            self.rounds_since_improved += 1;
        }
        let w = self.stall_window;
        push_bounded(&mut self.primal, report.primal_feas_gap, w);
        push_bounded(&mut self.dual, report.dual_gap(), w);
        push_bounded(&mut self.binary, report.binary_gap, w);

        let settled = |hist: &VecDeque<f64>, tol: f64| {
            let last = *hist.back().expect("just pushed");
            last <= tol || (hist.len() == w && relative_change(hist) < self.stall_rel_change)
        };
        settled(&self.primal, self.tol_primal)
            && settled(&self.dual, self.tol_dual)
            && settled(&self.binary, self.tol_binary)
            && self.rounds_since_improved >= w
    }
}

fn push_bounded(h: &mut VecDeque<f64>, v: f64, cap: usize) {
    if h.len() == cap {
        h.pop_front();
    }
    h.push_back(v);
}

/// `(max - min) / max |h|` over the window, 0 for an all-zero window.
fn relative_change(h: &VecDeque<f64>) -> f64 {
    let (lo, hi, mag) = h.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64),
        |(lo, hi, mag), &v| (lo.min(v), hi.max(v), mag.max(v.abs())),
    );
    if mag == 0.0 {
        0.0
    } else if !(hi - lo).is_finite() {
        f64::INFINITY
    } else {
        (hi - lo) / mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report(p: f64, d: f64, b: f64) -> ResidualReport {
        ResidualReport {
            sx_norm: d,
            sy_norm: 0.0,
            primal_feas_gap: p,
            binary_gap: b,
        }
    }

    #[test]
    fn first_update_enforces_increment() {
        let mut s = PenaltySchedule::new(1.0, 3.0, 4.0, 1.0, 0.1);
        assert_eq!(s.update_penalty(), 1.1);
    }

    #[test]
    fn update_at_counter_four() {
        let mut s = PenaltySchedule::new(1.0, 3.0, 4.0, 1.0, 0.1);
        let seq: Vec<f64> = (0..5).map(|_| s.update_penalty()).collect();
        // n = 1..3 give tilde 1.25, 1.5, 1.75; n = 4 gives tilde 2
        assert_eq!(seq[4], 2.0);
        assert!(seq.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn capped_forever() {
        let mut s = PenaltySchedule::new(1.0, 3.0, 4.0, 1.0, 0.1);
        for _ in 0..1000 {
            s.update_penalty();
        }
        assert_eq!(s.update_penalty(), 3.0);
        assert_eq!(s.update_penalty(), 3.0);
    }

    #[test]
    fn halts_when_all_zero_and_no_improvement() {
        let mut h = HaltState::new(1e-6, 1e-6, 1e-6, 5, 1e-8);
        let r = report(0.0, 0.0, 0.0);
        let decisions: Vec<bool> = (0..5).map(|_| h.check_halt(&r, false)).collect();
        assert_eq!(decisions, vec![false, false, false, false, true]);
    }

    #[test]
    fn improvement_resets_counter() {
        let mut h = HaltState::new(1e-6, 1e-6, 1e-6, 3, 1e-8);
        let r = report(0.0, 0.0, 0.0);
        h.check_halt(&r, false);
        h.check_halt(&r, false);
        assert!(!h.check_halt(&r, true));
        assert_eq!(h.rounds_since_improved(), 0);
    }

    #[test]
    fn oscillating_binary_gap_blocks_halt() {
        let mut h = HaltState::new(1e-6, 1e-6, 1e-6, 4, 1e-8);
        for i in 0..50 {
            let b = if i % 2 == 0 { 0.2 } else { 0.1 };
            assert!(!h.check_halt(&report(0.0, 0.0, b), false));
        }
    }

    #[test]
    fn constant_gaps_stall() {
        let mut h = HaltState::new(1e-6, 1e-6, 1e-6, 4, 1e-8);
        let r = report(0.3, 2.0, 0.1);
        let decisions: Vec<bool> = (0..4).map(|_| h.check_halt(&r, false)).collect();
        assert_eq!(decisions, vec![false, false, false, true]);
    }

    proptest! {
        #[test]
        fn penalty_sequence_monotone_and_bounded(
            rho_min in 1e-6f64..10.0,
            span in 0.0f64..100.0,
            t in 1.0f64..1000.0,
            p in 0.1f64..4.0,
            delta in 0.0f64..1.0,
        ) {
            let mut s = PenaltySchedule::new(rho_min, rho_min + span, t, p, delta);
            let mut prev = rho_min;
            for n in 0..200u64 {
                let tilde = s.target(n);
                let rho = s.update_penalty();
                prop_assert!(rho >= prev);
                prop_assert!(rho >= rho_min && rho <= rho_min + span);
                prop_assert_eq!(rho, tilde.max(prev + delta).min(rho_min + span));
                prev = rho;
            }
        }

        #[test]
        fn never_halts_while_moving_above_tolerance(vals in proptest::collection::vec(0.01f64..1.0, 10..40)) {
            let mut h = HaltState::new(1e-6, 1e-6, 1e-6, 3, 1e-8);
            let mut b = 0.0;
            for v in &vals {
                // binary gap grows by at least 0.01 every check
                b += v;
                prop_assert!(!h.check_halt(&report(0.0, 0.0, b), false));
            }
        }
    }
}
