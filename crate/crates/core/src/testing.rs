//! Seeded instance generators shared by unit, integration and acceptance tests.

use rand::Rng;
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;

use crate::lifting::{self, LiftedQP};
use crate::linalg::{Mat, Vector};
use crate::solver::{self, ActiveSet, Tolerances};
use crate::problem::{
    check_admissible, Parameter, PlantModel, ProblemDefinition, StageConstraint, StageConstraints, StageWeights,
};

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn scalar(v: f64) -> Mat {
    Mat::from_element(1, 1, v)
}

/// `min ½z²` subject to `g_k z <= r_k` at θ = `scalar_theta()`.
///
/// Each row is encoded as `-r_k x + g_k u <= 0`, so any sign of `r_k` is allowed
/// while `d` stays nonnegative.
pub fn scalar_problem(rows: &[(f64, f64)]) -> ProblemDefinition {
    let model = PlantModel::new(scalar(0.0), scalar(0.0));
    let weights = StageWeights::constant(&scalar(0.0), &scalar(1.0), &scalar(0.0), &scalar(0.0), &scalar(0.0), 1);
    let mut cons = StageConstraints::unconstrained(1, 1, 1);
    let p = rows.len();
    cons.stages[0] = StageConstraint {
        d: Vector::zeros(p),
        cal_e: Mat::from_fn(p, 1, |i, _| -rows[i].1),
        cal_f: Mat::zeros(p, 1),
        e: Mat::from_fn(p, 1, |i, _| rows[i].0),
    };
    ProblemDefinition::with_perfect_model(model, weights, cons, 1)
}

pub fn scalar_qp(rows: &[(f64, f64)]) -> LiftedQP {
    lifting::build(&scalar_problem(rows)).expect("scalar problem is coercive")
}

/// θ = (x = 1, u₋₁ = 0).
pub fn scalar_theta() -> Parameter {
    Parameter::new(Vector::from_element(1, 1.0), Vector::zeros(1))
}

fn gauss(rng: &mut TestRng) -> f64 {
    rng.sample(StandardNormal)
}

fn gauss_mat(rng: &mut TestRng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| gauss(rng))
}

fn random_psd(rng: &mut TestRng, n: usize, shift: f64) -> Mat {
    let l = gauss_mat(rng, n, n);
    &l * l.transpose() * (1.0 / n as f64) + Mat::identity(n, n) * shift
}

/// Size limits of a random instance.
#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub nx_max: usize,
    pub nu_max: usize,
    pub horizon_max: usize,
    pub p_max: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            nx_max: 4,
            nu_max: 2,
            horizon_max: 3,
            p_max: 12,
        }
    }
}

/// Random problem with strictly positive bounds and a parameter for which
/// `u' = 0` is strictly feasible.
pub fn random_problem(rng: &mut TestRng, spec: RandomSpec) -> (ProblemDefinition, Parameter) {
    let nx = rng.random_range(1..=spec.nx_max);
    let nu = rng.random_range(1..=spec.nu_max);
    let n = rng.random_range(1..=spec.horizon_max);

    let mut a = gauss_mat(rng, nx, nx);
    let radius = a.clone().complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if radius > 0.0 {
        a *= rng.random_range(0.5..1.2) / radius;
    }
    let b = gauss_mat(rng, nx, nu);

    let mut weights = StageWeights::zeros(nx, nu, n);
    for k in 0..n {
        let joint = random_psd(rng, nx + nu, 0.0);
        let mut q = joint.view((0, 0), (nx, nx)).into_owned();
        let mut r = joint.view((nx, nx), (nu, nu)).into_owned() + Mat::identity(nu, nu) * 0.1;
        q = (&q + q.transpose()) * 0.5;
        r = (&r + r.transpose()) * 0.5;
        weights.q[k] = q;
        weights.r[k] = r;
        weights.m[k] = joint.view((0, nx), (nx, nu)).into_owned() * 0.5;
    }
    for k in 0..=n {
        weights.v[k] = if rng.random_bool(0.5) { random_psd(rng, nu, 0.0) * 0.2 } else { Mat::zeros(nu, nu) };
    }
    weights.p = random_psd(rng, nx, 0.0);

    let total = rng.random_range(n..=spec.p_max.max(n));
    let mut per_stage = vec![0usize; n];
    for _ in 0..total {
        per_stage[rng.random_range(0..n)] += 1;
    }
    let mut cons = StageConstraints::unconstrained(nx, nu, n);
    for (k, &pk) in per_stage.iter().enumerate() {
        let with_state = rng.random_bool(0.7);
        cons.stages[k] = StageConstraint {
            d: Vector::from_fn(pk, |_, _| rng.random_range(0.1..1.0)),
            cal_e: if with_state { gauss_mat(rng, pk, nx) } else { Mat::zeros(pk, nx) },
            cal_f: if rng.random_bool(0.3) { gauss_mat(rng, pk, nu) * 0.5 } else { Mat::zeros(pk, nu) },
            e: gauss_mat(rng, pk, nu),
        };
    }

    let p = ProblemDefinition::with_perfect_model(PlantModel::new(a, b), weights, cons, n);
    let mut theta = Parameter::new(
        Vector::from_fn(nx, |_, _| gauss(rng) * 2.0),
        Vector::from_fn(nu, |_, _| gauss(rng)),
    );
    let zero_u = Vector::zeros(n * nu);
    for _ in 0..60 {
        let adm = check_admissible(&p, &zero_u, &theta).expect("dimensions are consistent");
        if adm.stacked().iter().all(|s| *s > 1e-6) {
            break;
        }
        theta.x *= 0.7;
        theta.u_prev *= 0.7;
    }
    (p, theta)
}

/// Appends rows that are positive multiples or positive combinations of rows
/// already in the same stage. Returns the number of rows added.
pub fn append_dependent_rows(rng: &mut TestRng, p: &mut ProblemDefinition, active_rows: &[(usize, usize)]) -> usize {
    let mut added = 0;
    for &(stage, row) in active_rows {
        if stage >= p.horizon {
            continue;
        }
        let st = &p.constraints.stages[stage];
        let c = rng.random_range(0.5..2.0);
        let mut extra = pick_row(st, row, c);
        let others: Vec<usize> = (0..st.rows()).filter(|&r| r != row).collect();
        if !others.is_empty() && rng.random_bool(0.5) {
            let other = others[rng.random_range(0..others.len())];
            let c2 = rng.random_range(0.1..1.0);
            let second = pick_row(st, other, c2);
            extra = add_rows(&extra, &second);
        }
        p.constraints.stages[stage] = st.stack(&extra);
        added += 1;
    }
    added
}

fn pick_row(st: &StageConstraint, row: usize, c: f64) -> StageConstraint {
    StageConstraint {
        d: Vector::from_element(1, st.d[row] * c),
        cal_e: st.cal_e.rows(row, 1) * c,
        cal_f: st.cal_f.rows(row, 1) * c,
        e: st.e.rows(row, 1) * c,
    }
}

fn add_rows(a: &StageConstraint, b: &StageConstraint) -> StageConstraint {
    StageConstraint {
        d: &a.d + &b.d,
        cal_e: &a.cal_e + &b.cal_e,
        cal_f: &a.cal_f + &b.cal_f,
        e: &a.e + &b.e,
    }
}

/// Random problem with redundant rows appended to constraints active at the
/// optimum, plus an active set that includes them and so violates LICQ.
#[derive(Clone, Debug)]
pub struct DegenerateInstance {
    pub problem: ProblemDefinition,
    pub theta: Parameter,
    /// Minimizer of the problem before the rows were appended.
    pub z_base: Vector,
    /// Sufficient but linearly dependent set in the augmented problem.
    pub dependent_set: Vec<usize>,
    pub added_rows: usize,
}

/// Draws until the optimum has at least one active constraint.
pub fn degenerate_instance(rng: &mut TestRng) -> DegenerateInstance {
    loop {
        let (mut p, theta) = random_problem(rng, RandomSpec::default());
        let qp = lifting::build(&p).expect("random problems are coercive");
        let tol = Tolerances::for_qp(&qp);
        let res = solver::solve(&qp, &theta, &ActiveSet::empty(qp.p_tilde()), &tol).expect("valid inputs");
        if !res.is_optimal() || res.active_set.is_empty() {
            continue;
        }
        let active: Vec<(usize, usize)> = res
            .active_set
            .indices()
            .into_iter()
            .map(|k| qp.constraints.stage_offsets[k])
            .filter(|&(stage, _)| stage < p.horizon)
            .collect();
        if active.is_empty() {
            continue;
        }
        let before: Vec<usize> = p.constraints.stages.iter().map(|s| s.rows()).collect();
        let added = append_dependent_rows(rng, &mut p, &active);
        // a row built from two originals is only active if both are; keep the
        // ones that are, by checking slacks at the known minimizer
        let aug = lifting::build(&p).expect("same cost");
        let z = res.z_star.clone();
        let slack = aug.eval_constraints(&z, &theta).expect("dimensions");
        let find = |stage: usize, row: usize| {
            aug.constraints
                .stage_offsets
                .iter()
                .position(|&o| o == (stage, row))
                .expect("row exists")
        };
        let mut dependent: Vec<usize> = active.iter().map(|&(s, r)| find(s, r)).collect();
        for (stage, &n0) in before.iter().enumerate() {
            for r in n0..p.constraints.stages[stage].rows() {
                let k = find(stage, r);
                if slack[k].abs() <= 1e-9 * (1.0 + aug.constraints.w.amax()) {
                    dependent.push(k);
                }
            }
        }
        if dependent.len() == active.len() {
            continue;
        }
        dependent.sort_unstable();
        return DegenerateInstance {
            problem: p,
            theta,
            z_base: z,
            dependent_set: dependent,
            added_rows: added,
        };
    }
}

/// Ten constraints, two horizon steps, no admissible input:
/// `u₀ >= x` and `u₀ <= -x` at `x = 1`, padded with loose boxes.
pub fn infeasible_problem() -> (ProblemDefinition, Parameter) {
    let model = PlantModel::new(scalar(1.0), scalar(1.0));
    let weights = StageWeights::constant(&scalar(1.0), &scalar(1.0), &scalar(0.0), &scalar(0.0), &scalar(1.0), 2);
    let mut cons = StageConstraints::unconstrained(1, 1, 2);
    cons.stages[0] = StageConstraint {
        d: Vector::from_vec(vec![0.0, 0.0, 5.0, 5.0]),
        cal_e: Mat::from_column_slice(4, 1, &[1.0, 1.0, 0.0, 0.0]),
        cal_f: Mat::zeros(4, 1),
        e: Mat::from_column_slice(4, 1, &[-1.0, 1.0, 1.0, -1.0]),
    };
    cons.stages[1] = StageConstraint {
        d: Vector::from_vec(vec![5.0, 5.0, 6.0, 6.0, 7.0, 7.0]),
        cal_e: Mat::zeros(6, 1),
        cal_f: Mat::zeros(6, 1),
        e: Mat::from_column_slice(6, 1, &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]),
    };
    let p = ProblemDefinition::with_perfect_model(model, weights, cons, 2);
    (p, Parameter::new(Vector::from_element(1, 1.0), Vector::zeros(1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_strictly_feasible_at_zero() {
        let mut r = rng(7);
        for _ in 0..50 {
            let (p, th) = random_problem(&mut r, RandomSpec::default());
            assert!(crate::problem::validate(&p, 1e-10).is_valid());
            assert!(p.constraints.total_rows() <= 12);
            let adm = check_admissible(&p, &Vector::zeros(p.horizon * p.nu()), &th).unwrap();
            assert!(adm.stacked().iter().all(|s| *s > 0.0));
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let (a, _) = random_problem(&mut rng(3), RandomSpec::default());
        let (b, _) = random_problem(&mut rng(3), RandomSpec::default());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn infeasible_has_ten_rows() {
        let (p, _) = infeasible_problem();
        assert_eq!(p.constraints.total_rows(), 10);
    }
}
