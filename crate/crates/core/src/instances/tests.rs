use super::*;
use crate::exec::Execution;
use crate::linalg::SparseMatrix;
use crate::model::{eval_objective, is_feasible};
use proptest::prelude::*;

fn optimum(inst: &BipInstance) -> OracleResult {
    brute_force(inst, Execution::default())
        .unwrap()
        .optimal()
        .cloned()
        .expect("feasible")
}

#[test]
fn setcover_single() {
    let inst = gen_setcover(1, 1, 0).unwrap();
    assert_eq!(inst.ineq_matrix().to_dense(), vec![vec![1.0]]);
    assert_eq!(optimum(&inst).x_opt, vec![1.0]);
}

#[test]
fn setcover_rows_nonempty_and_all_ones_feasible() {
    for seed in 0..20 {
        let inst = gen_setcover(15, 30, seed).unwrap();
        let a = inst.ineq_matrix();
        assert!((0..a.n_rows()).all(|r| a.row(r).count() >= 1));
        assert!(is_feasible(&inst, &vec![1.0; 30]).unwrap());
        assert!(inst
            .c()
            .iter()
            .all(|&v| (1.0..=100.0).contains(&v) && v.fract() == 0.0));
    }
}

#[test]
fn setcover_fixture_has_optimum() {
    let inst = gen_setcover(5, 10, 7).unwrap();
    let r = optimum(&inst);
    assert_eq!(r.enumerated, 1024);
    assert!(is_feasible(&inst, &r.x_opt).unwrap());
}

#[test]
fn knapsack_small() {
    let inst = knapsack_from(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
    assert_eq!(inst.ineq_rhs(), &[-1.0]);
    let r = optimum(&inst);
    assert_eq!(r.z_opt, -1.0);
    assert_eq!(r.x_opt, vec![1.0, 0.0]);
}

#[test]
fn knapsack_shape() {
    let inst = gen_knapsack(12, 3).unwrap();
    assert_eq!((inst.m1(), inst.m2()), (1, 0));
    assert!(is_feasible(&inst, &[0.0; 12]).unwrap());
    assert_eq!(inst.meta().nnz, Some(12));
}

#[test]
fn maxcut_single_edge() {
    let inst = maxcut_from(2, &[(0, 1, 1.0)], MaxCutForm::Qp).unwrap();
    let r = optimum(&inst);
    assert_eq!(r.z_opt, -1.0);
    assert_eq!(r.x_opt, vec![1.0, 0.0]);
    assert_eq!(eval_objective(&inst, &[0.0, 1.0]).unwrap(), -1.0);
}

#[test]
fn maxcut_qp_matches_cut_value() {
    let edges = random_graph(7, 5);
    let inst = maxcut_from(7, &edges, MaxCutForm::Qp).unwrap();
    for mask in 0u32..128 {
        let x: Vec<f64> = (0..7).map(|i| (mask >> i & 1) as f64).collect();
        let cut: f64 = edges
            .iter()
            .filter(|&&(i, j, _)| x[i] != x[j])
            .map(|&(_, _, w)| w)
            .sum();
        assert_eq!(eval_objective(&inst, &x).unwrap(), -cut);
    }
}

#[test]
fn maxcut_zero_weights() {
    let inst = maxcut_from(3, &[(0, 1, 0.0), (1, 2, 0.0)], MaxCutForm::Qp).unwrap();
    assert_eq!(optimum(&inst).z_opt, 0.0);
}

#[test]
fn maxcut_forms_agree() {
    for n in 2..=6 {
        for seed in 0..4 {
            let qp = gen_maxcut(n, seed, MaxCutForm::Qp).unwrap();
            let ip = gen_maxcut(n, seed, MaxCutForm::Ip).unwrap();
            if ip.n() > ORACLE_MAX_N {
                continue;
            }
            assert_eq!(optimum(&qp).z_opt, optimum(&ip).z_opt, "n={n} seed={seed}");
        }
    }
}

#[test]
fn maxcut_weights_on_grid() {
    for (_, _, w) in random_graph(20, 1) {
        assert!((-8.0..=10.0).contains(&w));
        assert_eq!((w * WEIGHT_GRID).fract(), 0.0);
    }
}

#[test]
fn assign3d_counts() {
    let one = gen_assign3d(1, 0).unwrap();
    assert_eq!(optimum(&one).x_opt, vec![1.0]);
    let two = gen_assign3d(2, 0).unwrap();
    let r = optimum(&two);
    assert_eq!(r.enumerated, 256);
    assert_eq!(r.feasible_count, 4);
    assert_eq!(r.x_opt.iter().filter(|&&v| v == 1.0).count(), 2);
    assert_eq!(two.meta().sampler.as_deref(), Some("assignment3d"));
}

#[test]
fn facility_single_site_open() {
    let inst = gen_facility(1, 3, 4).unwrap();
    let r = optimum(&inst);
    assert_eq!(r.x_opt[0], 1.0);
    let two = gen_facility(2, 2, 9).unwrap();
    assert_eq!(optimum(&two), optimum(&gen_facility(2, 2, 9).unwrap()));
    let mut all = vec![1.0; 2];
    let cost: Vec<f64> = two.c()[2..].to_vec();
    let mut y = vec![0.0; 4];
    for j in 0..2 {
        let i = if cost[j] <= cost[2 + j] { 0 } else { 1 };
        y[i * 2 + j] = 1.0;
    }
    all.extend(y);
    assert!(is_feasible(&two, &all).unwrap());
}

#[test]
fn tsp_three_cities() {
    let dist = vec![
        vec![0.0, 3.0, 10.0],
        vec![7.0, 0.0, 2.0],
        vec![4.0, 20.0, 0.0],
    ];
    let inst = tsp_from(&dist).unwrap();
    let r = optimum(&inst);
    // 0->1->2->0 costs 9, 0->2->1->0 costs 37
    assert_eq!(r.z_opt, 9.0);
    let lay = TspLayout { n: 3 };
    assert!(is_feasible(&inst, &lay.encode_tour(&[0, 2, 1])).unwrap());
    assert!(tsp_from(&dist[..2]).is_err());
}

#[test]
fn tsp_tours_feasible() {
    let inst = gen_tsp_mtz(6, 2).unwrap();
    let lay = TspLayout { n: 6 };
    for tour in [[0, 1, 2, 3, 4, 5], [0, 5, 3, 1, 2, 4], [0, 2, 4, 1, 5, 3]] {
        assert!(is_feasible(&inst, &lay.encode_tour(&tour)).unwrap());
    }
}

#[test]
fn tsp_level_order() {
    let inst = gen_tsp_mtz(5, 0).unwrap();
    let lay = TspLayout { n: 5 };
    let mut x = lay.encode_tour(&[0, 1, 2, 3, 4]);
    // city 4 is last: levels (1, 1, 1); pattern (1, 0, 1) breaks monotonicity
    assert!(is_feasible(&inst, &x).unwrap());
    x[lay.level(4, 1)] = 0.0;
    assert!(!is_feasible(&inst, &x).unwrap());
}

#[test]
fn tu_metadata_certified() {
    use crate::tu::{to_integer_dense, verify_tu_small};
    let cases = [
        gen_assign3d(2, 0).unwrap(),
        gen_assign3d(3, 0).unwrap(),
        gen_facility(2, 3, 0).unwrap(),
        gen_tsp_mtz(3, 0).unwrap(),
        gen_tsp_mtz(4, 0).unwrap(),
    ];
    for inst in cases {
        let rows = inst.meta().tu_rows.clone().unwrap();
        let b_j = inst.eq_matrix().select_rows(&rows);
        let m = to_integer_dense(&b_j).unwrap();
        assert!(verify_tu_small(&m).unwrap(), "{}", inst.meta().class);
        crate::tu::tu_from_meta(&inst).unwrap();
    }
}

#[test]
fn oracle_examples() {
    let free = BipInstance::new(vec![1.0]).unwrap();
    let r = optimum(&free);
    assert_eq!((r.z_opt, r.x_opt.clone()), (0.0, vec![0.0]));

    let a = SparseMatrix::from_dense(&[vec![1.0], vec![-1.0]]).unwrap();
    let bad = BipInstance::new(vec![1.0])
        .unwrap()
        .with_inequalities(a, vec![1.0, 0.0])
        .unwrap();
    assert_eq!(
        brute_force(&bad, Execution::default()).unwrap(),
        OracleOutcome::Infeasible { enumerated: 2 }
    );
    let big = BipInstance::new(vec![0.0; 25]).unwrap();
    assert!(brute_force(&big, Execution::default()).is_err());
}

#[test]
fn oracle_tie_break_lowest_value() {
    // x0 and x1 both optimal alone; lowest binary value is x0 = 1
    let a = SparseMatrix::from_dense(&[vec![1.0, 1.0]]).unwrap();
    let inst = BipInstance::new(vec![1.0, 1.0])
        .unwrap()
        .with_inequalities(a, vec![1.0])
        .unwrap();
    assert_eq!(optimum(&inst).x_opt, vec![1.0, 0.0]);
}

#[test]
fn oracle_sequential_matches_parallel() {
    let inst = gen_maxcut(16, 4, MaxCutForm::Qp).unwrap();
    let a = brute_force(&inst, Execution::Sequential).unwrap();
    let b = brute_force(&inst, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_round_trip_all_classes() {
    let cfgs = [
        ProblemClass::Setcover { m: 4, n: 9 },
        ProblemClass::Knapsack { n: 5 },
        ProblemClass::MaxcutQp { n: 6 },
        ProblemClass::MaxcutIp { n: 5 },
        ProblemClass::Assign3d { n: 2 },
        ProblemClass::Facility { n_f: 2, n_c: 3 },
        ProblemClass::TspMtz { n: 4 },
    ];
    for class in cfgs {
        let inst = generate(&GeneratorConfig { class, seed: 11 }).unwrap();
        assert_eq!(inst.meta().class, class.tag());
        let back = instance_from_json(&instance_to_json(&inst)).unwrap();
        assert_eq!(back, inst);
    }
}

#[test]
fn json_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.json");
    let inst = gen_knapsack(4, 1).unwrap();
    write_instance(&inst, &path).unwrap();
    assert_eq!(read_instance(&path).unwrap(), inst);
}

#[test]
fn json_errors() {
    let unknown = r#"{"n":1,"c":[1.0],"extra":3}"#;
    let msg = instance_from_json(unknown).unwrap_err().to_string();
    assert!(msg.contains("extra"), "{msg}");

    let short_b = r#"{"n":1,"c":[1.0],"A":{"rows":1,"cols":1,"nnz":1,"row_ptr":[0,1],"col_idx":[0],"vals":[1.0]},"b":[]}"#;
    assert!(matches!(
        instance_from_json(short_b),
        Err(InstanceError::Model(crate::model::ModelError::Dimension {
            what: "b",
            ..
        }))
    ));

    let no_q = r#"{"n":2,"c":[1.0,2.0]}"#;
    let inst = instance_from_json(no_q).unwrap();
    assert!(inst.q().is_empty());
    assert_eq!(inst.meta().class, "custom");

    assert!(instance_from_json(r#"{"n":2,"c":[1.0]}"#).is_err());
    assert!(instance_from_json(r#"{"n":1,"c":[null]}"#).is_err());
}

#[test]
fn generators_deterministic() {
    assert_eq!(
        gen_setcover(6, 20, 5).unwrap(),
        gen_setcover(6, 20, 5).unwrap()
    );
    assert_ne!(
        gen_setcover(6, 20, 5).unwrap(),
        gen_setcover(6, 20, 6).unwrap()
    );
    assert_eq!(gen_tsp_mtz(5, 1).unwrap(), gen_tsp_mtz(5, 1).unwrap());
}

#[test]
fn nnz_recorded() {
    let inst = gen_maxcut(8, 2, MaxCutForm::Ip).unwrap();
    assert_eq!(inst.meta().nnz, Some(inst.nnz()));
}

proptest! {
    #[test]
    fn oracle_matches_naive(
        c in proptest::collection::vec(-5i32..5, 1..9),
        rows in proptest::collection::vec(proptest::collection::vec(-2i32..3, 8), 0..4),
        rhs in proptest::collection::vec(-2i32..3, 4),
    ) {
        let n = c.len();
        let dense: Vec<Vec<f64>> = rows.iter().map(|r| r[..n].iter().map(|&v| v as f64).collect()).collect();
        let a = SparseMatrix::from_triplets(
            dense.len(),
            n,
            &dense.iter().enumerate().flat_map(|(r, row)| row.iter().enumerate().map(move |(i, &v)| (r, i, v))).collect::<Vec<_>>(),
        ).unwrap();
        let inst = BipInstance::new(c.iter().map(|&v| v as f64).collect()).unwrap()
            .with_inequalities(a, rhs[..dense.len()].iter().map(|&v| v as f64).collect()).unwrap();
        let mut best: Option<(f64, u32)> = None;
        let mut count = 0;
        for m in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|i| (m >> i & 1) as f64).collect();
            if is_feasible(&inst, &x).unwrap() {
                count += 1;
                let z = eval_objective(&inst, &x).unwrap();
                if best.map_or(true, |(bz, _)| z < bz) {
                    best = Some((z, m));
                }
            }
        }
        match brute_force(&inst, Execution::default()).unwrap() {
            OracleOutcome::Optimal(r) => {
                let (bz, bm) = best.unwrap();
                prop_assert_eq!(r.z_opt, bz);
                prop_assert_eq!(r.x_opt, (0..n).map(|i| (bm >> i & 1) as f64).collect::<Vec<_>>());
                prop_assert_eq!(r.feasible_count, count);
            }
            OracleOutcome::Infeasible { .. } => prop_assert!(best.is_none()),
        }
    }
}
