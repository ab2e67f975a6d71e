use nalgebra::{Cholesky, SymmetricEigen};

use super::{ActiveSet, Tolerances};
use crate::error::{Error, Result};
use crate::lifting::LiftedQP;
use crate::linalg::{self, Mat, Vector};
use crate::problem::Parameter;

/// Minimizer of the equality-constrained subproblem for one candidate set.
#[derive(Clone, Debug)]
pub struct KktSolution {
    pub z: Vector,
    /// Multipliers on the candidate's indices, ascending index order.
    pub lambda_a: Vector,
}

#[derive(Clone, Debug)]
pub enum KktOutcome {
    Solved(KktSolution),
    Singular,
}

/// `K = G_A H⁻¹ G_Aᵀ` is declared singular when its smallest eigenvalue is at
/// most `tol_singular` times its largest.
pub(crate) fn is_singular(k: &Mat, tol_singular: f64) -> bool {
    let ev = SymmetricEigen::new(k.clone()).eigenvalues;
    let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    !(max > 0.0) || min <= tol_singular * max
}

/// Candidate solve against a precomputed right-hand side `r = W + Sθ`.
pub(crate) fn kkt_with_rhs(qp: &LiftedQP, idx: &[usize], r: &Vector, tol_singular: f64) -> KktOutcome {
    if idx.is_empty() {
        return KktOutcome::Solved(KktSolution {
            z: Vector::zeros(qp.nz()),
            lambda_a: Vector::zeros(0),
        });
    }
    let k = linalg::select_sub(qp.ghg(), idx, idx);
    if is_singular(&k, tol_singular) {
        return KktOutcome::Singular;
    }
    let r_a = Vector::from_iterator(idx.len(), idx.iter().map(|&i| r[i]));
    let Some(chol) = Cholesky::new(k) else {
        return KktOutcome::Singular;
    };
    let lambda_a = -chol.solve(&r_a);
    let z = -(linalg::select_cols(qp.hinv_gt(), idx) * &lambda_a);
    KktOutcome::Solved(KktSolution { z, lambda_a })
}

/// Solves the KKT system of the candidate set: `λ = -K⁻¹(W_A + S_Aθ)`, `z = -H⁻¹G_Aᵀλ`.
/// The empty set yields `z = 0` without any linear solve.
pub fn kkt_solve(qp: &LiftedQP, aset: &ActiveSet, theta: &Parameter, tol: &Tolerances) -> Result<KktOutcome> {
    check_set(qp, aset)?;
    let th = theta.stacked();
    if th.len() != qp.dims.ntheta() {
        return Err(Error::dim("theta", qp.dims.ntheta(), th.len()));
    }
    Ok(kkt_with_rhs(qp, &aset.indices(), &qp.rhs(&th), tol.tol_singular))
}

pub(crate) fn check_set(qp: &LiftedQP, aset: &ActiveSet) -> Result<()> {
    if aset.p_tilde() != qp.p_tilde() {
        return Err(Error::dim("active set width", qp.p_tilde(), aset.p_tilde()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Optimality {
    Optimal,
    /// Violated constraints, most violated first, and negative multipliers,
    /// most negative first. Either list may be empty but not both.
    NotOptimal {
        violations: Vec<usize>,
        negative_multipliers: Vec<usize>,
    },
}

impl Optimality {
    pub fn is_optimal(&self) -> bool {
        matches!(self, Optimality::Optimal)
    }
}

pub(crate) fn classify(slack: &Vector, idx: &[usize], lambda_a: &Vector, tol: &Tolerances) -> Optimality {
    let mut viol: Vec<(usize, f64)> = slack
        .iter()
        .enumerate()
        .filter(|(k, s)| **s < -tol.tol_violation && idx.binary_search(k).is_err())
        .map(|(k, s)| (k, *s))
        .collect();
    viol.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut neg: Vec<(usize, f64)> = idx
        .iter()
        .zip(lambda_a.iter())
        .filter(|(_, l)| **l < -tol.tol_lambda)
        .map(|(k, l)| (*k, *l))
        .collect();
    neg.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    if viol.is_empty() && neg.is_empty() {
        Optimality::Optimal
    } else {
        Optimality::NotOptimal {
            violations: viol.into_iter().map(|v| v.0).collect(),
            negative_multipliers: neg.into_iter().map(|v| v.0).collect(),
        }
    }
}

/// Primal feasibility of the non-candidate constraints and dual feasibility on the candidate.
pub fn check_optimality(
    qp: &LiftedQP,
    z_star: &Vector,
    lambda_a: &Vector,
    aset: &ActiveSet,
    theta: &Parameter,
    tol: &Tolerances,
) -> Result<Optimality> {
    check_set(qp, aset)?;
    if lambda_a.len() != aset.cardinality() {
        return Err(Error::dim("multipliers", aset.cardinality(), lambda_a.len()));
    }
    let slack = qp.eval_constraints(z_star, theta)?;
    Ok(classify(&slack, &aset.indices(), lambda_a, tol))
}

/// Residuals of the optimality conditions of a candidate solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktCertificate {
    /// `‖Hz + G_Aᵀλ_A‖`
    pub stationarity: f64,
    /// `‖G_A z - W_A - S_Aθ‖∞`
    pub active_equality: f64,
    pub min_slack: f64,
    pub min_lambda: f64,
    pub z_norm: f64,
}

impl KktCertificate {
    pub fn compute(qp: &LiftedQP, z: &Vector, lambda: &Vector, aset: &ActiveSet, theta: &Parameter) -> Result<Self> {
        check_set(qp, aset)?;
        if lambda.len() != qp.p_tilde() {
            return Err(Error::dim("full multiplier vector", qp.p_tilde(), lambda.len()));
        }
        let slack = qp.eval_constraints(z, theta)?;
        let stat = qp.h() * z + qp.g().transpose() * lambda;
        let idx = aset.indices();
        let active_equality = idx.iter().map(|&k| slack[k].abs()).fold(0.0, f64::max);
        Ok(Self {
            stationarity: stat.norm(),
            active_equality,
            min_slack: slack.iter().cloned().fold(f64::INFINITY, f64::min),
            min_lambda: lambda.iter().cloned().fold(f64::INFINITY, f64::min),
            z_norm: z.norm(),
        })
    }

    /// Thresholds: stationarity `<= 1e-8 (1 + ‖z‖)`, equality `<= 1e-8`, slack and λ `>= -1e-9`.
    pub fn passes(&self) -> bool {
        self.stationarity <= 1e-8 * (1.0 + self.z_norm)
            && self.active_equality <= 1e-8
            && self.min_slack >= -1e-9
            && self.min_lambda >= -1e-9
    }
}
