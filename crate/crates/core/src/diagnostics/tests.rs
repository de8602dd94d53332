use super::*;
use crate::instances::gen_setcover;
use crate::linalg::SparseMatrix;
use crate::model::{build_saddle_form, preprocess};
use approx::assert_relative_eq;
use proptest::prelude::*;

// min x  s.t.  x >= 0.5, whose saddle point is (0.5, 1)
fn half_form() -> SaddleForm {
    let inst = BipInstance::new(vec![1.0])
        .unwrap()
        .with_inequalities(SparseMatrix::from_dense(&[vec![1.0]]).unwrap(), vec![0.5])
        .unwrap();
    build_saddle_form(&inst).unwrap()
}

fn lp_form(m: usize, n: usize, seed: u64) -> SaddleForm {
    preprocess(&build_saddle_form(&gen_setcover(m, n, seed).unwrap()).unwrap())
}

#[test]
fn start_at_saddle_gives_zero() {
    let sf = half_form();
    let steps = default_steps(0.25).unwrap();
    let start = SolverState::from_point(vec![0.5], vec![1.0]);
    let recs = record_steps(&sf, steps, start, 3).unwrap();
    let reference = ReferencePoint {
        x: vec![0.5],
        y: vec![1.0],
        fixed_point_residual: 0.0,
    };
    let rep = certificate_check(
        &recs,
        &sf,
        steps,
        0.0,
        &[0.5],
        &[1.0],
        Some(&reference),
        &[1, 3],
    )
    .unwrap();
    assert_eq!(rep.delta0, 0.0);
    let r = &rep.rows[0];
    assert_eq!(
        (r.k0, r.min_combined_residual, r.rx_at_k0, r.ry_at_k0),
        (1, 0.0, 0.0, 0.0)
    );
    assert_eq!(rep.violations, 0);
}

#[test]
fn reference_point_of_tiny_lp() {
    let sf = half_form();
    let r = reference_saddle_point(&sf, 0.25, 20_000, 100).unwrap();
    assert_relative_eq!(r.x[0], 0.5, epsilon = 1e-8);
    assert_relative_eq!(r.y[0], 1.0, epsilon = 1e-8);
    assert!(r.fixed_point_residual < 1e-8);
}

#[test]
fn doubling_horizon_shrinks_by_sqrt2() {
    let steps = StepSizes::new(0.5, 0.3).unwrap();
    let (a1, b1, e1, c1) = envelopes(2.7, steps, 500);
    let (a2, b2, e2, c2) = envelopes(2.7, steps, 1000);
    assert_relative_eq!(a1 / a2, 2f64.sqrt(), max_relative = 1e-14);
    assert_relative_eq!(b1 / b2, 2f64.sqrt(), max_relative = 1e-14);
    assert_relative_eq!(e1 / e2, 2.0, max_relative = 1e-14);
    assert_relative_eq!(c1 / c2, 2.0, max_relative = 1e-14);
}

#[test]
fn initial_distance_formula() {
    let steps = StepSizes::new(0.5, 0.25).unwrap();
    // 1 / (2 * 0.5) + 4 / (2 * 0.25)
    assert_eq!(initial_distance(steps, &[0.0], &[0.0], &[1.0], &[2.0]), 9.0);
}

#[test]
fn nonconvex_rejected() {
    let mut sf = half_form();
    let steps = default_steps(0.25).unwrap();
    let recs = record_steps(&sf, steps, SolverState::initial(1, 1), 2).unwrap();
    let reference = ReferencePoint {
        x: vec![0.5],
        y: vec![1.0],
        fixed_point_residual: 0.0,
    };
    let err = certificate_check(
        &recs,
        &sf,
        steps,
        0.1,
        &[0.5],
        &[0.0],
        Some(&reference),
        &[1],
    );
    assert!(matches!(err, Err(DiagnosticsError::Nonconvex)));
    sf.q = SparseMatrix::from_dense(&[vec![-1.0]]).unwrap();
    let err = certificate_check(
        &recs,
        &sf,
        steps,
        0.0,
        &[0.5],
        &[0.0],
        Some(&reference),
        &[1],
    );
    assert!(matches!(err, Err(DiagnosticsError::Nonconvex)));
}

#[test]
fn missing_reference_rejected() {
    let sf = half_form();
    let steps = default_steps(0.25).unwrap();
    let recs = record_steps(&sf, steps, SolverState::initial(1, 1), 2).unwrap();
    let err = certificate_check(&recs, &sf, steps, 0.0, &[0.5], &[0.0], None, &[1]);
    assert!(matches!(err, Err(DiagnosticsError::MissingReference)));
}

#[test]
fn horizon_beyond_record_rejected() {
    let sf = half_form();
    let steps = default_steps(0.25).unwrap();
    let recs = record_steps(&sf, steps, SolverState::initial(1, 1), 2).unwrap();
    let reference = ReferencePoint {
        x: vec![0.5],
        y: vec![1.0],
        fixed_point_residual: 0.0,
    };
    let err = certificate_check(
        &recs,
        &sf,
        steps,
        0.0,
        &[0.5],
        &[0.0],
        Some(&reference),
        &[3],
    );
    assert!(matches!(err, Err(DiagnosticsError::Horizon { n: 3, .. })));
}

#[test]
fn convexity_test() {
    let mut sf = half_form();
    assert!(is_convex(&sf, 0.0).unwrap());
    sf.q = SparseMatrix::from_dense(&[vec![2.0]]).unwrap();
    assert!(is_convex(&sf, 1.5).unwrap());
    assert!(!is_convex(&sf, 2.5).unwrap());
    let mut sf2 = lp_form(3, 2, 0);
    sf2.q = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert!(!is_convex(&sf2, 0.0).unwrap());
    sf2.q = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    assert!(is_convex(&sf2, 0.0).unwrap());
}

#[test]
fn small_setcover_lp_certificate_holds() {
    let sf = lp_form(8, 12, 3);
    let steps = default_steps(0.25).unwrap();
    let reference = reference_saddle_point(&sf, 0.25, 100_000, 1000).unwrap();
    let start = SolverState::initial(sf.n(), sf.m());
    let (x0, y0) = (start.x.clone(), start.y.clone());
    let recs = record_steps(&sf, steps, start, 800).unwrap();
    let rep = certificate_check(
        &recs,
        &sf,
        steps,
        0.0,
        &x0,
        &y0,
        Some(&reference),
        &[100, 200, 400, 800],
    )
    .unwrap();
    assert!(rep.delta0 > 0.0);
    assert_eq!(rep.violations, 0, "{:?}", rep.rows);
    assert_eq!(rep.per_step_epsilon_violations, 0);
    let csv = rep.to_csv().unwrap();
    assert!(csv.starts_with("N,k0,min_combined_residual,combined_bound,"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn weak_rows_are_reported() {
    let sf = lp_form(5, 8, 1);
    let steps = default_steps(0.25).unwrap();
    let start = SolverState::initial(sf.n(), sf.m());
    let phi0 = lagrangian(&sf, &start.x, &start.y, 0.0);
    let recs = record_steps(&sf, steps, start, 200).unwrap();
    let rows = weak_convex_rows(&recs, &sf, steps, phi0, &[50, 200]).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.min_residual >= 0.0 && r.rhs.is_finite() && r.phi_lower <= phi0);
    }
    assert!(rows[1].min_residual <= rows[0].min_residual);
}

#[test]
fn feasible_binary_point_always_hits() {
    let inst = gen_setcover(4, 6, 2).unwrap();
    let rep =
        bound_validation(&inst, &[vec![1.0; 6]], 3, 50, 1.0, 9, Execution::Sequential).unwrap();
    assert_eq!(rep.rows[0].empirical_feasible, 1.0);
    assert!(rep.rows[0].margin.unwrap() >= 0.0);
}

#[test]
fn zero_gamma_bound_is_zero() {
    let inst = gen_setcover(4, 6, 2).unwrap();
    let rep =
        bound_validation(&inst, &[vec![0.0; 6]], 4, 20, 1.0, 9, Execution::Sequential).unwrap();
    let r = &rep.rows[0];
    assert_eq!(r.phi, Some(0.0));
    assert_eq!(r.empirical_feasible, 0.0);
    assert!(r.margin.unwrap() >= 0.0);
}

#[test]
fn bound_validation_rejects_large_n() {
    let inst = gen_setcover(3, 13, 0).unwrap();
    let err = bound_validation(&inst, &[], 1, 1, 1.0, 0, Execution::Sequential);
    assert!(matches!(err, Err(DiagnosticsError::TooLarge { n: 13, .. })));
}

#[test]
fn bound_validation_is_execution_independent() {
    let inst = gen_setcover(5, 8, 4).unwrap();
    let sched = vec![vec![0.6; 8], vec![0.9; 8]];
    let a = bound_validation(&inst, &sched, 4, 200, 5.0, 1, Execution::Sequential).unwrap();
    let b = bound_validation(&inst, &sched, 4, 200, 5.0, 1, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn envelopes_scale_as_inverse_sqrt(d in 0.0f64..100.0, n in 1usize..10_000, t1 in 0.01f64..1.0, t2 in 0.01f64..1.0) {
        let steps = StepSizes::new(t1, t2).unwrap();
        let (a1, b1, e1, c1) = envelopes(d, steps, n);
        let (a4, b4, e4, c4) = envelopes(d, steps, 4 * n);
        prop_assert!(a1 >= 0.0 && b1 >= 0.0 && e1 >= 0.0 && c1 >= 0.0);
        prop_assert!((a4 * 2.0 - a1).abs() <= 1e-12 * (1.0 + a1));
        prop_assert!((b4 * 2.0 - b1).abs() <= 1e-12 * (1.0 + b1));
        prop_assert!((e4 * 4.0 - e1).abs() <= 1e-12 * (1.0 + e1));
        prop_assert!((c4 * 4.0 - c1).abs() <= 1e-12 * (1.0 + c1));
    }

    #[test]
    fn empirical_frequencies_in_unit_interval(seed in 0u64..1000, p in 0.0f64..1.0) {
        let inst = gen_setcover(3, 5, seed).unwrap();
        let rep = bound_validation(&inst, &[vec![p; 5]], 2, 30, 1.0, seed, Execution::Sequential).unwrap();
        let r = &rep.rows[0];
        prop_assert!((0.0..=1.0).contains(&r.empirical_feasible));
        prop_assert!((0.0..=1.0).contains(&r.empirical_optimal.unwrap()));
        if let Some(v) = r.phi { prop_assert!((0.0..=1.0).contains(&v)); }
    }
}
