//! Reference solvers for cross-checking the active-set search. Both are
//! exponential or slow in the worst case and meant for small instances.

use std::time::Instant;

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::lifting::LiftedQP;
use crate::linalg::Vector;
use crate::problem::Parameter;
use crate::solver::{self, ActiveSet, KktOutcome, SolveResult, SolveStats, SolveStatus, SubsetCursor, Tolerances};

pub const ENUMERATE_MAX_CONSTRAINTS: usize = 20;

/// Tries every candidate with at most `N·n_u` members in (cardinality, bitmask)
/// order and returns the first sufficient one.
pub fn enumerate(qp: &LiftedQP, theta: &Parameter, tol: &Tolerances) -> Result<SolveResult> {
    let p = qp.p_tilde();
    if p > ENUMERATE_MAX_CONSTRAINTS {
        return Err(Error::Guard(format!(
            "enumeration limited to {ENUMERATE_MAX_CONSTRAINTS} constraints, got {p}"
        )));
    }
    let start = Instant::now();
    let mut stats = SolveStats::default();
    for cand in SubsetCursor::new(p, qp.nz()) {
        stats.candidates_visited += 1;
        if !cand.is_empty() {
            stats.kkt_solves += 1;
        }
        let sol = match solver::kkt_solve(qp, &cand, theta, tol)? {
            KktOutcome::Solved(s) => s,
            KktOutcome::Singular => {
                stats.licq_failures += 1;
                continue;
            }
        };
        if solver::check_optimality(qp, &sol.z, &sol.lambda_a, &cand, theta, tol)?.is_optimal() {
            stats.wall_time_s = start.elapsed().as_secs_f64();
            return Ok(SolveResult::optimal(qp, &theta.stacked(), cand, sol, stats));
        }
    }
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok(SolveResult::failed(SolveStatus::Infeasible, p, stats))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualAscentOptions {
    /// Full sweeps over all constraints.
    pub max_iter: usize,
    /// Bound on the projected dual residual `max_k |λ_k - max(0, λ_k + f_k)|`.
    pub tol: f64,
}

impl Default for DualAscentOptions {
    fn default() -> Self {
        Self {
            max_iter: 200_000,
            tol: 1e-12,
        }
    }
}

/// Cyclic coordinate ascent on the dual (Hildreth). Requires a strictly
/// feasible problem for the dual optimum to be attained.
pub fn dual_ascent(qp: &LiftedQP, theta: &Parameter, opts: DualAscentOptions) -> Result<Vector> {
    let th = theta.stacked();
    if th.len() != qp.dims.ntheta() {
        return Err(Error::dim("theta", qp.dims.ntheta(), th.len()));
    }
    let g = qp.g();
    let p = g.nrows();
    let mut z = Vector::zeros(qp.nz());
    if p == 0 {
        return Ok(z);
    }
    // Own factorization on purpose: nothing shared with the active-set path.
    let chol = Cholesky::new(qp.h().clone()).ok_or_else(|| Error::Singular("H is not positive definite".into()))?;
    let y = chol.solve(&g.transpose());
    let diag: Vec<f64> = (0..p).map(|k| g.row(k).dot(&y.column(k).transpose())).collect();
    let r = &qp.constraints.w + &qp.constraints.s * &th;
    let mut lambda = Vector::zeros(p);

    for _ in 0..opts.max_iter {
        let mut residual: f64 = 0.0;
        for k in 0..p {
            if diag[k] <= 0.0 {
                continue;
            }
            let f = g.row(k).dot(&z.transpose()) - r[k];
            residual = residual.max((lambda[k] - (lambda[k] + f).max(0.0)).abs());
            let next = (lambda[k] + f / diag[k]).max(0.0);
            let step = next - lambda[k];
            if step != 0.0 {
                z.axpy(-step, &y.column(k), 1.0);
                lambda[k] = next;
            }
        }
        if residual <= opts.tol {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence(format!(
        "dual ascent did not reach residual {:.1e} in {} sweeps",
        opts.tol, opts.max_iter
    )))
}

/// Wraps `dual_ascent` into a `SolveResult`; the active set holds constraints
/// whose slack is below `tol_violation`, multipliers are not reported.
pub fn dual_ascent_result(qp: &LiftedQP, theta: &Parameter, tol: &Tolerances, opts: DualAscentOptions) -> Result<SolveResult> {
    let start = Instant::now();
    let z = dual_ascent(qp, theta, opts)?;
    let slack = qp.eval_constraints(&z, theta)?;
    let idx: Vec<usize> = (0..slack.len()).filter(|&k| slack[k] <= tol.tol_violation).collect();
    let th = theta.stacked();
    let u_seq = &z - qp.hinv_f() * &th;
    let stats = SolveStats {
        wall_time_s: start.elapsed().as_secs_f64(),
        ..SolveStats::default()
    };
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        u_first: u_seq.rows(0, qp.dims.nu).into_owned(),
        u_seq,
        z_star: z,
        lambda: Vector::zeros(qp.p_tilde()),
        active_set: ActiveSet::from_indices(qp.p_tilde(), &idx),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{scalar_qp, scalar_theta};

    fn tol() -> Tolerances {
        Tolerances {
            tol_violation: 1e-9,
            tol_lambda: 1e-9,
            tol_singular: 1e-10,
            max_kkt_solves: 1000,
        }
    }

    #[test]
    fn enumerate_z_ge_one() {
        let qp = scalar_qp(&[(-1.0, -1.0)]);
        let e = enumerate(&qp, &scalar_theta(), &tol()).unwrap();
        let s = solver::solve(&qp, &scalar_theta(), &ActiveSet::empty(1), &tol()).unwrap();
        assert!(e.is_optimal());
        assert_eq!(e.active_set, s.active_set);
        assert!((e.z_star[0] - s.z_star[0]).abs() < 1e-15);
    }

    #[test]
    fn enumerate_unconstrained() {
        let qp = scalar_qp(&[]);
        let e = enumerate(&qp, &scalar_theta(), &tol()).unwrap();
        assert!(e.is_optimal());
        assert!(e.active_set.is_empty());
        assert_eq!(e.z_star[0], 0.0);
    }

    #[test]
    fn enumerate_infeasible() {
        let qp = scalar_qp(&[(1.0, -1.0), (-1.0, -1.0)]);
        assert_eq!(enumerate(&qp, &scalar_theta(), &tol()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn enumerate_guard() {
        let rows = vec![(1.0, 1.0); 21];
        let qp = scalar_qp(&rows);
        assert!(matches!(enumerate(&qp, &scalar_theta(), &tol()), Err(Error::Guard(_))));
    }

    #[test]
    fn dual_ascent_cases() {
        let opts = DualAscentOptions::default();
        let free = scalar_qp(&[]);
        assert_eq!(dual_ascent(&free, &scalar_theta(), opts).unwrap()[0], 0.0);
        let qp = scalar_qp(&[(-1.0, -1.0)]);
        let z = dual_ascent(&qp, &scalar_theta(), opts).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dual_ascent_no_convergence_on_infeasible() {
        let qp = scalar_qp(&[(1.0, -1.0), (-1.0, -1.0)]);
        let opts = DualAscentOptions { max_iter: 100, tol: 1e-12 };
        assert!(matches!(dual_ascent(&qp, &scalar_theta(), opts), Err(Error::NoConvergence(_))));
    }
}
