use empc_core::lifting;
use empc_core::linalg::Vector;
use empc_core::problem::{check_admissible, evaluate_cost};
use empc_core::testing::{random_problem, rng, RandomSpec};
use proptest::prelude::*;

fn input_seq(len: usize, seed: u64) -> Vector {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    Vector::from_fn(len, |_, _| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifted_cost_matches_stagewise(seed in 0u64..10_000, useed in any::<u64>()) {
        let (p, theta) = random_problem(&mut rng(seed), RandomSpec::default());
        let qp = lifting::build(&p).unwrap();
        let u = input_seq(qp.nz(), useed);
        let direct = evaluate_cost(&p, &u, &theta).unwrap();
        let lifted = qp.evaluate_lifted_cost(&u, &theta).unwrap();
        prop_assert!((direct - lifted).abs() <= 1e-9 * (1.0 + direct.abs()), "{} vs {}", direct, lifted);
    }

    #[test]
    fn lifted_slacks_match_stagewise(seed in 0u64..10_000, useed in any::<u64>()) {
        let (p, theta) = random_problem(&mut rng(seed), RandomSpec::default());
        let qp = lifting::build(&p).unwrap();
        let u = input_seq(qp.nz(), useed);
        let z = qp.to_z(&u, &theta).unwrap();
        let lifted = qp.eval_constraints(&z, &theta).unwrap();
        let direct = check_admissible(&p, &u, &theta).unwrap().stacked();
        prop_assert_eq!(lifted.len(), direct.len());
        prop_assert!((lifted - direct).amax() <= 1e-9 * (1.0 + qp.constraints.w.amax()));
    }

    #[test]
    fn z_coordinates_round_trip(seed in 0u64..10_000, useed in any::<u64>()) {
        let (p, theta) = random_problem(&mut rng(seed), RandomSpec::default());
        let qp = lifting::build(&p).unwrap();
        let u = input_seq(qp.nz(), useed);
        let back = qp.from_z(&qp.to_z(&u, &theta).unwrap(), &theta).unwrap();
        prop_assert!((back - u).amax() < 1e-10);
    }
}

#[test]
fn json_round_trip_preserves_lifting() {
    let (p, theta) = random_problem(&mut rng(5), RandomSpec::default());
    let q = empc_core::ProblemDefinition::from_json(&p.to_json().unwrap()).unwrap();
    let (a, b) = (lifting::build(&p).unwrap(), lifting::build(&q).unwrap());
    assert_eq!(a.h(), b.h());
    assert_eq!(a.g(), b.g());
    assert_eq!(a.rhs(&theta.stacked()), b.rhs(&theta.stacked()));
}
