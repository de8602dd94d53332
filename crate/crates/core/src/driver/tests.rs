use super::*;
use crate::exec::Execution;
use crate::instances::{brute_force, gen_assign3d, gen_facility, gen_setcover};

fn quick(seed: u64) -> SolveConfig {
    SolveConfig {
        seed,
        time_limit_seconds: 5.0,
        clock: ClockMode::Virtual { tick: 1e-3 },
        ..SolveConfig::default()
    }
}

#[test]
fn setcover_fixture_near_optimal() {
    let inst = gen_setcover(5, 10, 7).unwrap();
    let opt = brute_force(&inst, Execution::default()).unwrap();
    let z_opt = opt.optimal().unwrap().z_opt;
    let out = solve(&inst, &quick(7)).unwrap();
    let inc = out.incumbent;
    assert!(is_feasible(&inst, inc.x_best.as_ref().unwrap()).unwrap());
    assert!(inc.z_best <= 1.1 * z_opt, "{} vs {}", inc.z_best, z_opt);
}

#[test]
fn unconstrained_single_variable() {
    let inst = BipInstance::new(vec![1.0]).unwrap();
    let out = solve(&inst, &quick(0)).unwrap();
    assert_eq!(out.incumbent.x_best, Some(vec![0.0]));
    assert_eq!(out.incumbent.z_best, 0.0);
}

#[test]
fn deterministic_traces() {
    let inst = gen_setcover(8, 14, 3).unwrap();
    let a = solve(&inst, &quick(5)).unwrap();
    let b = solve(&inst, &quick(5)).unwrap();
    assert_eq!(a.trace, b.trace);
    let seq = SolveConfig {
        exec: Execution::Sequential,
        ..quick(5)
    };
    assert_eq!(a.trace, solve(&inst, &seq).unwrap().trace);
}

#[test]
fn z_best_monotone_and_found_at_matches_trace() {
    let inst = gen_setcover(10, 16, 2).unwrap();
    let out = solve(&inst, &quick(1)).unwrap();
    let zs: Vec<f64> = out.trace.iter().filter_map(|r| r.z_best).collect();
    assert!(zs.windows(2).all(|w| w[1] <= w[0]));
    let last_change = out
        .trace
        .iter()
        .enumerate()
        .filter(|(i, r)| *i == 0 || r.z_best != out.trace[i - 1].z_best)
        .last()
        .map(|(_, r)| r.clone())
        .unwrap();
    assert_eq!(last_change.z_best, Some(out.incumbent.z_best));
    assert_eq!(last_change.iter, out.incumbent.found_at_iter);
    assert!(out
        .trace
        .windows(2)
        .all(|w| w[1].wall_seconds >= w[0].wall_seconds));
}

#[test]
fn sampling_round_count() {
    let inst = gen_setcover(6, 12, 4).unwrap();
    for (k_int, k_r, k_total) in [(10, 1, 95), (7, 3, 50), (1, 2, 13)] {
        let cfg = SolveConfig {
            k_int,
            k_r,
            max_iter: Some(k_total),
            stall_window: 10_000,
            ..quick(0)
        };
        let out = solve(&inst, &cfg).unwrap();
        assert_eq!(out.stop, StopReason::IterationLimit);
        assert_eq!(out.iterations, k_total);
        assert_eq!(out.sampling_rounds, (k_total / k_int) * k_r);
    }
}

#[test]
fn tu_on_and_off_feasible() {
    for inst in [gen_facility(2, 4, 1).unwrap(), gen_assign3d(3, 2).unwrap()] {
        for tu in [TuMode::Auto, TuMode::Off] {
            let cfg = SolveConfig { tu, ..quick(3) };
            let out = solve(&inst, &cfg).unwrap();
            let x = out.incumbent.x_best.expect("incumbent");
            assert!(
                is_feasible(&inst, &x).unwrap(),
                "{} {:?}",
                inst.meta().class,
                tu
            );
            if tu == TuMode::Auto {
                assert!(out.working_n < inst.n());
            }
        }
    }
}

#[test]
fn bernoulli_override_on_assignment() {
    let inst = gen_assign3d(2, 0).unwrap();
    let cfg = SolveConfig {
        sampler: Some("bernoulli".into()),
        monotone: true,
        tu: TuMode::Off,
        ..quick(9)
    };
    let out = solve(&inst, &cfg).unwrap();
    assert!(out.incumbent.is_some());
}

#[test]
fn time_limit_respected() {
    let inst = gen_setcover(6, 12, 4).unwrap();
    let cfg = SolveConfig {
        time_limit_seconds: 0.05,
        stall_window: 1_000_000,
        ..quick(0)
    };
    let out = solve(&inst, &cfg).unwrap();
    assert_eq!(out.stop, StopReason::TimeLimit);
    assert!(out.iterations <= 100);
}

#[test]
fn diagnostics_emit_bounds() {
    let inst = gen_setcover(4, 8, 1).unwrap();
    let cfg = SolveConfig {
        diagnostics: true,
        max_iter: Some(30),
        ..quick(0)
    };
    let out = solve(&inst, &cfg).unwrap();
    assert!(out
        .trace
        .iter()
        .all(|r| r.phi.is_some_and(|v| (0.0..=1.0).contains(&v))));
}

#[test]
fn invalid_config_rejected() {
    let inst = BipInstance::new(vec![1.0]).unwrap();
    let cfg = SolveConfig {
        k_b: 0,
        ..SolveConfig::default()
    };
    assert!(matches!(solve(&inst, &cfg), Err(SolveError::Config(_))));
    let cfg = SolveConfig {
        sigma: 1.5,
        ..SolveConfig::default()
    };
    assert!(matches!(solve(&inst, &cfg), Err(SolveError::Steps(_))));
}

#[test]
fn rounding_ties_to_one() {
    assert_eq!(
        round_binary(&[0.5, 0.49, 1.0, 0.0]),
        vec![1.0, 0.0, 1.0, 0.0]
    );
}
