//! Online active-set search for the condensed pQP.
//!
//! Candidates come from a LIFO stack fed by facet flips (add the violated
//! constraints, drop the negative multipliers); when the stack runs dry the
//! search falls back to walking all subsets in (cardinality, bitmask) order.
//! Subsets containing a known LICQ violator are never evaluated, nor is any
//! candidate larger than the number of decision variables.

mod active_set;
mod kkt;
mod licq;

use std::collections::HashSet;
use std::time::Instant;

pub use active_set::{ActiveSet, SubsetCursor};
pub use kkt::{check_optimality, kkt_solve, KktCertificate, KktOutcome, KktSolution, Optimality};
pub use licq::reduce_to_licq;

use crate::error::{Error, Result};
use crate::lifting::LiftedQP;
use crate::linalg::Vector;
use crate::problem::Parameter;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub tol_violation: f64,
    pub tol_lambda: f64,
    /// Relative to the largest eigenvalue of `G_A H⁻¹ G_Aᵀ`.
    pub tol_singular: f64,
    pub max_kkt_solves: usize,
}

impl Tolerances {
    pub const DEFAULT_BUDGET: usize = 10_000;

    /// `1e-9 (1 + ‖W‖∞)` for slacks and multipliers.
    pub fn for_qp(qp: &LiftedQP) -> Self {
        let scale = 1.0 + qp.constraints.w.amax();
        Self {
            tol_violation: 1e-9 * scale,
            tol_lambda: 1e-9 * scale,
            tol_singular: 1e-10,
            max_kkt_solves: Self::DEFAULT_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tol_violation > 0.0 && self.tol_lambda > 0.0 && self.tol_singular > 0.0 && self.max_kkt_solves > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("tolerances must be positive: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    BudgetExhausted,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::BudgetExhausted => "BudgetExhausted",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub candidates_visited: usize,
    pub licq_failures: usize,
    pub kkt_solves: usize,
    pub wall_time_s: f64,
}

/// On any status other than `Optimal` the vectors are empty and
/// `active_set` is the empty set.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub u_first: Vector,
    pub u_seq: Vector,
    pub z_star: Vector,
    /// Length p̃; zero off the active set.
    pub lambda: Vector,
    pub active_set: ActiveSet,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub(crate) fn failed(status: SolveStatus, p_tilde: usize, stats: SolveStats) -> Self {
        Self {
            status,
            u_first: Vector::zeros(0),
            u_seq: Vector::zeros(0),
            z_star: Vector::zeros(0),
            lambda: Vector::zeros(0),
            active_set: ActiveSet::empty(p_tilde),
            stats,
        }
    }

    pub(crate) fn optimal(
        qp: &LiftedQP,
        theta: &Vector,
        aset: ActiveSet,
        sol: KktSolution,
        stats: SolveStats,
    ) -> Self {
        let u_seq = &sol.z - qp.hinv_f() * theta;
        let u_first = u_seq.rows(0, qp.dims.nu).into_owned();
        let mut lambda = Vector::zeros(qp.p_tilde());
        for (k, l) in aset.indices().into_iter().zip(sol.lambda_a.iter()) {
            lambda[k] = *l;
        }
        Self {
            status: SolveStatus::Optimal,
            u_first,
            u_seq,
            z_star: sol.z,
            lambda,
            active_set: aset,
            stats,
        }
    }

    pub fn certificate(&self, qp: &LiftedQP, theta: &Parameter) -> Result<KktCertificate> {
        KktCertificate::compute(qp, &self.z_star, &self.lambda, &self.active_set, theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Record visited candidates. Without it the search cannot prove
    /// infeasibility and stops only on the KKT-solve budget.
    pub track_visited: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { track_visited: true }
    }
}

/// Search bookkeeping of one solve call.
#[derive(Debug)]
pub struct SolverState {
    pub stack: Vec<ActiveSet>,
    pub visited: HashSet<ActiveSet>,
    /// Minimal LICQ violators; no element is a subset of another.
    pub licq_violators: Vec<ActiveSet>,
    pub iterations: usize,
    pub kkt_solves: usize,
    fallback: SubsetCursor,
}

impl SolverState {
    fn new(p_tilde: usize, max_card: usize) -> Self {
        Self {
            stack: Vec::new(),
            visited: HashSet::new(),
            licq_violators: Vec::new(),
            iterations: 0,
            kkt_solves: 0,
            fallback: SubsetCursor::new(p_tilde, max_card),
        }
    }

    pub fn contains_violator(&self, a: &ActiveSet) -> bool {
        self.licq_violators.iter().any(|l| l.is_subset_of(a))
    }

    /// Keeps the violator list minimal under inclusion.
    pub fn add_violator(&mut self, a: ActiveSet) {
        if self.contains_violator(&a) {
            return;
        }
        self.licq_violators.retain(|l| !a.is_subset_of(l));
        self.licq_violators.push(a);
    }

    fn skip(&self, a: &ActiveSet) -> bool {
        self.visited.contains(a) || self.contains_violator(a)
    }

    fn next_candidate(&mut self, restart_fallback: bool) -> Option<ActiveSet> {
        while let Some(a) = self.stack.pop() {
            if !self.skip(&a) {
                return Some(a);
            }
        }
        loop {
            while let Some(a) = self.fallback.next() {
                if !self.skip(&a) {
                    return Some(a);
                }
            }
            if !restart_fallback {
                return None;
            }
            self.fallback.restart();
        }
    }
}

pub fn solve(qp: &LiftedQP, theta: &Parameter, warm: &ActiveSet, tol: &Tolerances) -> Result<SolveResult> {
    solve_with(qp, theta, warm, tol, SolveOptions::default())
}

pub fn solve_with(
    qp: &LiftedQP,
    theta: &Parameter,
    warm: &ActiveSet,
    tol: &Tolerances,
    opts: SolveOptions,
) -> Result<SolveResult> {
    tol.validate()?;
    kkt::check_set(qp, warm)?;
    let th = theta.stacked();
    if th.len() != qp.dims.ntheta() {
        return Err(Error::dim("theta", qp.dims.ntheta(), th.len()));
    }
    if !theta.is_finite() {
        return Err(Error::Invalid("theta contains non-finite values".into()));
    }
    let start = Instant::now();
    let p = qp.p_tilde();
    let max_card = qp.nz();
    let r = qp.rhs(&th);
    let mut st = SolverState::new(p, max_card);
    let mut stats = SolveStats::default();
    if warm.cardinality() <= max_card {
        st.stack.push(warm.clone());
    }

    let finish = |mut stats: SolveStats, st: &SolverState| {
        stats.kkt_solves = st.kkt_solves;
        stats.wall_time_s = start.elapsed().as_secs_f64();
        stats
    };

    loop {
        if st.kkt_solves >= tol.max_kkt_solves {
            return Ok(SolveResult::failed(SolveStatus::BudgetExhausted, p, finish(stats, &st)));
        }
        let Some(cand) = st.next_candidate(!opts.track_visited) else {
            return Ok(SolveResult::failed(SolveStatus::Infeasible, p, finish(stats, &st)));
        };
        if opts.track_visited {
            st.visited.insert(cand.clone());
        }
        st.iterations += 1;
        stats.candidates_visited += 1;

        let idx = cand.indices();
        if !idx.is_empty() {
            st.kkt_solves += 1;
        }
        let sol = match kkt::kkt_with_rhs(qp, &idx, &r, tol.tol_singular) {
            KktOutcome::Solved(s) => s,
            KktOutcome::Singular => {
                stats.licq_failures += 1;
                st.add_violator(cand);
                continue;
            }
        };
        let slack = &r - qp.g() * &sol.z;
        match kkt::classify(&slack, &idx, &sol.lambda_a, tol) {
            Optimality::Optimal => {
                let stats = finish(stats, &st);
                return Ok(SolveResult::optimal(qp, &th, cand, sol, stats));
            }
            Optimality::NotOptimal {
                violations,
                negative_multipliers,
            } => {
                // Lists are worst-first; pushing in reverse pops the worst first.
                if cand.cardinality() < max_card {
                    for &k in violations.iter().rev() {
                        let next = cand.with(k);
                        if !st.skip(&next) {
                            st.stack.push(next);
                        }
                    }
                }
                for &k in negative_multipliers.iter().rev() {
                    let next = cand.without(k);
                    if !st.skip(&next) {
                        st.stack.push(next);
                    }
                }
            }
        }
    }
}
