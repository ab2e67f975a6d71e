use empc_core::lifting;
use empc_core::oracle::{self, DualAscentOptions};
use empc_core::solver::{self, ActiveSet, SolveOptions, SolveStatus, Tolerances};
use empc_core::testing::{infeasible_problem, random_problem, rng, RandomSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Any warm start, including nonsense ones, leads to the same minimizer.
    #[test]
    fn warm_start_does_not_change_minimizer(seed in 0u64..5_000, mask in any::<u64>()) {
        let (p, theta) = random_problem(&mut rng(seed), RandomSpec::default());
        let qp = lifting::build(&p).unwrap();
        let tol = Tolerances::for_qp(&qp);
        let cold = solver::solve(&qp, &theta, &ActiveSet::empty(qp.p_tilde()), &tol).unwrap();
        let bits: Vec<usize> = (0..qp.p_tilde()).filter(|k| mask >> k & 1 == 1).collect();
        let warm_set = ActiveSet::from_indices(qp.p_tilde(), &bits);
        let warm = solver::solve(&qp, &theta, &warm_set, &tol).unwrap();
        prop_assert_eq!(cold.status, warm.status);
        if cold.is_optimal() {
            prop_assert!((&cold.z_star - &warm.z_star).norm() <= 1e-8);
            prop_assert!(warm.certificate(&qp, &theta).unwrap().passes());
        }
    }

    #[test]
    fn no_visited_variant_agrees(seed in 0u64..5_000) {
        let (p, theta) = random_problem(&mut rng(seed), RandomSpec::default());
        let qp = lifting::build(&p).unwrap();
        let tol = Tolerances::for_qp(&qp);
        let a = solver::solve(&qp, &theta, &ActiveSet::empty(qp.p_tilde()), &tol).unwrap();
        let b = solver::solve_with(&qp, &theta, &ActiveSet::empty(qp.p_tilde()), &tol, SolveOptions { track_visited: false }).unwrap();
        prop_assert_eq!(a.status, SolveStatus::Optimal);
        prop_assert_eq!(b.status, SolveStatus::Optimal);
        prop_assert!((&a.z_star - &b.z_star).norm() <= 1e-8);
    }

    #[test]
    fn dual_ascent_agrees_with_enumeration(seed in 0u64..5_000) {
        let (p, theta) = random_problem(&mut rng(seed), RandomSpec::default());
        let qp = lifting::build(&p).unwrap();
        let tol = Tolerances::for_qp(&qp);
        let e = oracle::enumerate(&qp, &theta, &tol).unwrap();
        let d = oracle::dual_ascent(&qp, &theta, DualAscentOptions::default()).unwrap();
        prop_assert!(e.is_optimal());
        prop_assert!((&e.z_star - d).norm() <= 1e-5);
    }
}

#[test]
fn multipliers_vanish_off_the_active_set() {
    let (p, theta) = random_problem(&mut rng(42), RandomSpec::default());
    let qp = lifting::build(&p).unwrap();
    let r = solver::solve(&qp, &theta, &ActiveSet::empty(qp.p_tilde()), &Tolerances::for_qp(&qp)).unwrap();
    for k in 0..qp.p_tilde() {
        if !r.active_set.contains(k) {
            assert_eq!(r.lambda[k], 0.0);
        }
    }
}

#[test]
fn infeasible_agrees_with_enumeration() {
    let (p, theta) = infeasible_problem();
    let qp = lifting::build(&p).unwrap();
    let tol = Tolerances::for_qp(&qp);
    let a = solver::solve(&qp, &theta, &ActiveSet::empty(qp.p_tilde()), &tol).unwrap();
    assert_eq!(a.status, SolveStatus::Infeasible);
    assert!(a.u_first.is_empty());
    assert_eq!(oracle::enumerate(&qp, &theta, &tol).unwrap().status, SolveStatus::Infeasible);
    // the bookkeeping-free variant cannot prove infeasibility
    let tight = Tolerances { max_kkt_solves: 200, ..tol };
    let b = solver::solve_with(&qp, &theta, &ActiveSet::empty(qp.p_tilde()), &tight, SolveOptions { track_visited: false }).unwrap();
    assert_eq!(b.status, SolveStatus::BudgetExhausted);
}
