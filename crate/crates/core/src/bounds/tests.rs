use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, FRAC_PI_8};

use proptest::prelude::*;

use super::*;
use crate::analysis::user_reduction;
use crate::rates::merge_and_send_rates;
use crate::states::{random_pure, StateParams, StateSpec};
use crate::tensor::SystemLayout;

fn one(m: usize, users: &[usize]) -> SubsetMask {
    SubsetMask::from_one_based(m, users).unwrap()
}

fn phi2(thetas: &[f64]) -> PureState {
    StateSpec {
        name: "phi2".into(),
        params: StateParams {
            thetas: Some(thetas.to_vec()),
            ..Default::default()
        },
    }
    .make()
    .unwrap()
}

fn light() -> OptimizerConfig {
    OptimizerConfig {
        random_restarts: 0,
        ..OptimizerConfig::default()
    }
}

fn rand_users(m: usize, seed: u64) -> PureState {
    random_pure(&SystemLayout::qubits(m, 1).unwrap(), seed).unwrap()
}

#[test]
fn exact_cuts_of_phi3() {
    let s = StateSpec::named("phi3").make().unwrap();
    let l2 = l_subset_exact(&s, one(4, &[2])).unwrap();
    assert!(l2.exact);
    assert!((l2.value - 1.0).abs() < 1e-12);
    assert!((l_subset_exact(&s, one(4, &[1])).unwrap().value + 1.0).abs() < 1e-12);
    assert!(l_subset_exact(&s, one(4, &[1, 3])).unwrap().value.abs() < 1e-12);
}

#[test]
fn exact_cut_of_phi5() {
    let s = StateSpec::named("phi5").make().unwrap();
    assert!((l_subset_exact(&s, one(6, &[2, 4])).unwrap().value - 2.0).abs() < 1e-12);
}

#[test]
fn exact_rejects_environment_and_bad_cuts() {
    let s = StateSpec::named("phi4").make().unwrap();
    assert!(l_subset_exact(&s, one(3, &[1])).is_err());
    let t = StateSpec::named("phi3").make().unwrap();
    assert!(l_subset_exact(&t, SubsetMask::empty(4)).is_err());
    assert!(l_subset_exact(&t, SubsetMask::full(4)).is_err());
}

#[test]
fn certified_delegates_to_exact_without_environment() {
    let s = rand_users(4, 3);
    for p in SubsetMask::all(4).filter(|p| p.is_proper()) {
        let a = l_subset_exact(&s, p).unwrap();
        let b = l_subset_certified(&s, p, &OptimizerConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn factor_split_attains_phi2_cut_values() {
    let thetas = [FRAC_PI_4, FRAC_PI_6, FRAC_PI_8];
    let s = phi2(&thetas);
    let h: Vec<f64> = thetas
        .iter()
        .map(|t| crate::entropy::binary_entropy(t.cos().powi(2)).unwrap())
        .collect();
    for i in 0..3 {
        let lv = l_subset_certified(&s, SubsetMask::singleton(3, i).unwrap(), &light()).unwrap();
        assert!(!lv.exact);
        let expected = h[(i + 2) % 3] + h[i];
        assert!(
            (lv.value - expected).abs() < 1e-9,
            "user {i}: {} vs {expected}",
            lv.value
        );
    }
    let total: f64 = h.iter().sum();
    assert!((l_k(&s, 1, &light()).unwrap() - total).abs() < 1e-9);
    assert!((l_lower(&s, &light()).unwrap() - total).abs() < 1e-9);
    let (u, _) = u_upper(&s).unwrap();
    assert!((u - total).abs() < 1e-9);
    for i in 0..3 {
        assert!((u_start(&s, i).unwrap() - total).abs() < 1e-9);
    }
}

#[test]
fn reduced_phi7_has_unit_lower_bound() {
    let s = StateSpec::named("phi7").make().unwrap();
    assert!(l_lower(&s, &light()).unwrap().abs() < 1e-9);
    let r = user_reduction(&s, 2).unwrap();
    let lv = l_subset_certified(&r, SubsetMask::singleton(3, 1).unwrap(), &light()).unwrap();
    assert!(lv.value >= 1.0 - 1e-6);
    assert!((l_k(&r, 1, &light()).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn phi4_lower_bound_is_positive() {
    let s = StateSpec::named("phi4").with_m(3).make().unwrap();
    assert!(l_lower(&s, &light()).unwrap() > 0.5);
}

#[test]
fn upper_bound_examples() {
    let s = StateSpec::named("phi3").make().unwrap();
    let (u, _) = u_upper(&s).unwrap();
    assert!((u - 2.0).abs() < 1e-9);
    let prod = PureState::basis(SystemLayout::qubits(4, 1).unwrap(), &[0, 1, 0, 1, 0]).unwrap();
    assert!(u_upper(&prod).unwrap().0.abs() < 1e-12);
    assert!(u_start(&prod, 4).is_err());
}

#[test]
fn two_user_upper_bound_forms() {
    let s = random_pure(&SystemLayout::uniform(2, 2, 2).unwrap(), 4).unwrap();
    let t = RotationTask::new(&s).unwrap();
    let (h1, h2) = (t.h_user(0).unwrap(), t.h_user(1).unwrap());
    let h12 = t.h(SubsetMask::full(2), false).unwrap();
    // u_1 = H(A_2) + H(A_1|A_2), u_2 = H(A_1) + H(A_2|A_1)
    assert!((u_start(&s, 0).unwrap() - (h2 + h12 - h2)).abs() < 1e-12);
    assert!((u_start(&s, 1).unwrap() - (h1 + h12 - h1)).abs() < 1e-12);
    assert!((u_start(&s, 0).unwrap() - (h1 + h2 - h12 + (h12 - h2) + (h12 - h1))).abs() < 1e-12);
}

#[test]
fn upper_bound_ties_go_to_first_start() {
    let s = StateSpec::named("phi4").with_m(4).make().unwrap();
    assert_eq!(u_upper(&s).unwrap().1, 0);
}

fn ledger_from_rates(r: &crate::rates::SegmentRateMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = r.m();
    let before = DMatrix::from_fn(m, m, |i, j| r.get(i, j).max(0.0));
    let after = DMatrix::from_fn(m, m, |i, j| (-r.get(i, j)).max(0.0));
    (before, after)
}

#[test]
fn partition_difference_of_ledgers() {
    let z = DMatrix::<f64>::zeros(4, 4);
    for p in SubsetMask::all(4).filter(|p| p.is_proper()) {
        assert_eq!(d_partition_difference(&z, &z, p).unwrap(), 0.0);
    }
    let s = phi2(&[FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, 0.3]);
    let t = RotationTask::new(&s).unwrap();
    let (before, after) = ledger_from_rates(&merge_and_send_rates(&t, 0).unwrap());
    for i in 0..4 {
        let d =
            d_partition_difference(&before, &after, SubsetMask::singleton(4, i).unwrap()).unwrap();
        let expected = t.h_user((i + 3) % 4).unwrap() + t.h_user(i).unwrap();
        assert!((d - expected).abs() < 1e-12);
    }
    // phi1: e_12 = -h, e_23 = +h, e_31 = 0
    let phi1 = StateSpec::named("phi1").with_theta(0.4).make().unwrap();
    let h = RotationTask::new(&phi1).unwrap().h_user(0).unwrap();
    let mut before = DMatrix::zeros(3, 3);
    let mut after = DMatrix::zeros(3, 3);
    before[(1, 2)] = h;
    before[(2, 1)] = h;
    after[(0, 1)] = h;
    after[(1, 0)] = h;
    for (p, d) in [(0, -h), (1, 0.0), (2, h)] {
        let mask = SubsetMask::singleton(3, p).unwrap();
        let dp = d_partition_difference(&before, &after, mask).unwrap();
        assert!((dp - d).abs() < 1e-12);
        assert!(dp >= l_subset_exact(&phi1, mask).unwrap().value - 1e-12);
    }
    let mut asym = DMatrix::zeros(3, 3);
    asym[(0, 1)] = 1.0;
    assert!(d_partition_difference(&asym, &asym, SubsetMask::singleton(3, 0).unwrap()).is_err());
}

#[test]
fn report_contents() {
    let s = StateSpec::named("phi3").make().unwrap();
    let r = bounds_report(&s, &light()).unwrap();
    assert_eq!(r.l_values.len(), 4 + 6);
    assert_eq!(r.l_k.len(), 2);
    assert!(r.l.abs() < 1e-9 && (r.u - 2.0).abs() < 1e-9);
    assert!(r.exact);
    assert!(!r.flags.positive_cost_detected);
}

#[test]
fn config_validation_and_json() {
    let c: OptimizerConfig = serde_json::from_str(r#"{"seed": 5, "random_restarts": 3}"#).unwrap();
    assert_eq!(c.seed, 5);
    assert_eq!(c.refine_iters, 100);
    assert!(serde_json::from_str::<OptimizerConfig>(r#"{"restarts": 3}"#).is_err());
    let bad = OptimizerConfig {
        step_decay: 1.5,
        ..OptimizerConfig::default()
    };
    assert!(bad.validate().is_err());
    let empty = OptimizerConfig {
        dv_sweep: Some(vec![]),
        ..OptimizerConfig::default()
    };
    assert!(empty.validate().is_err());
}

#[test]
fn random_search_reaches_structured_optimum_on_phi2() {
    // with only random candidates at d_V = 2 the climb should approach the factor split value
    let s = phi2(&[FRAC_PI_4, FRAC_PI_4]);
    let cfg = OptimizerConfig {
        random_restarts: 4,
        refine_iters: 150,
        dv_sweep: Some(vec![2]),
        ..OptimizerConfig::default()
    };
    let task = RotationTask::new(&s).unwrap();
    let (v, _) = search::search_cut(&task, SubsetMask::singleton(2, 0).unwrap(), &cfg).unwrap();
    assert!(v > 1.5, "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_cuts_are_complement_symmetric_and_telescope(seed in 0u64..10_000, m in 2usize..6) {
        let s = rand_users(m, seed);
        let task = RotationTask::new(&s).unwrap();
        let solver = LowerBoundSolver::new(&task, OptimizerConfig::default()).unwrap();
        for p in SubsetMask::all(m).filter(|p| p.is_proper()) {
            let a = l_exact_task(&task, p).unwrap().value;
            let b = l_exact_task(&task, p.complement()).unwrap().value;
            prop_assert!((a - b).abs() < 1e-9);
        }
        for k in 1..m {
            let sum: f64 = SubsetMask::all_of_size(m, k).map(|p| solver.l_subset(p).unwrap().value).sum();
            prop_assert!(sum.abs() < 1e-8);
            prop_assert!(solver.l_k(k).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn bounds_sandwich_with_environment(seed in 0u64..10_000, m in 2usize..5) {
        let s = random_pure(&SystemLayout::uniform(m, 2, 2).unwrap(), seed).unwrap();
        let cfg = OptimizerConfig { random_restarts: 1, refine_iters: 10, seed, ..OptimizerConfig::default() };
        let task = RotationTask::new(&s).unwrap();
        let solver = LowerBoundSolver::new(&task, cfg).unwrap();
        let (l, _) = solver.l_lower().unwrap();
        let (u, _) = u_upper_task(&task).unwrap();
        prop_assert!(l >= -1e-9);
        prop_assert!(l <= u + 1e-9);
        for i in 0..m {
            prop_assert!(u_start_task(&task, i).is_ok());
        }
    }
}
