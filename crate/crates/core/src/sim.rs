//! Closed-loop driver: lift once, then solve the pQP at every sampling instant
//! with the previous sufficient active set as warm start.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beam::{self, BenchmarkConfig, FdPlant, Observer, BENCHMARK_GRID_POINTS};
use crate::error::{Error, Result};
use crate::lifting::{self, LiftedQP};
use crate::linalg::{Mat, Vector};
use crate::oracle::{self, DualAscentOptions};
use crate::problem::{Parameter, ProblemDefinition};
use crate::solver::{self, ActiveSet, KktCertificate, SolveOptions, SolveResult, SolveStatus, Tolerances};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantMode {
    /// The plant is the prediction model.
    #[default]
    Perfect,
    /// Beam only: finite-difference plant, observed through a projection.
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    /// Active-set search with visited-set bookkeeping.
    #[default]
    #[serde(rename = "eMPC")]
    Empc,
    /// Same search without the visited set.
    #[serde(rename = "eMPCf")]
    EmpcF,
    #[serde(rename = "dual")]
    DualAscent,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Empc => "eMPC",
            Algorithm::EmpcF => "eMPCf",
            Algorithm::DualAscent => "dual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "empc" => Some(Algorithm::Empc),
            "empcf" => Some(Algorithm::EmpcF),
            "dual" | "dual_ascent" => Some(Algorithm::DualAscent),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub t_end: f64,
    /// Sampling period. Taken from the benchmark data when the problem has it.
    pub h: f64,
    pub mode: PlantMode,
    pub algorithm: Algorithm,
    /// `None` means `Tolerances::for_qp`.
    pub tolerances: Option<Tolerances>,
    /// Warm start every solve from the empty set.
    pub cold_start: bool,
    /// Check the KKT residuals of every optimal solve.
    pub certify: bool,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            h: 2f64.powi(-7),
            mode: PlantMode::Perfect,
            algorithm: Algorithm::Empc,
            tolerances: None,
            cold_start: false,
            certify: false,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn steps(&self) -> Result<usize> {
        if !(self.h > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::Invalid(format!("need h > 0 and t_end >= 0, got h = {}, t_end = {}", self.h, self.t_end)));
        }
        let r = self.t_end / self.h;
        let n = r.round();
        if (r - n).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::Invalid(format!("t_end = {} is not a multiple of h = {}", self.t_end, self.h)));
        }
        Ok(n as usize)
    }
}

/// One CSV row per sampling instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub t: f64,
    pub u1: f64,
    pub u2: f64,
    /// Lifted cost at the minimizer, constant term included.
    pub j_opt: f64,
    /// Running sum of applied stage costs up to and including this step.
    pub cumulative_cost: f64,
    pub mean_x1: f64,
    pub mean_x4: f64,
    pub active_set: String,
    pub candidates_visited: usize,
    pub licq_failures: usize,
    pub kkt_solves: usize,
    pub solve_time_s: f64,
    pub state_norm: f64,
}

#[derive(Clone, Debug)]
pub struct SimulationRun {
    pub logs: Vec<StepLog>,
    /// Closed-loop cost over the whole run.
    pub j_d: f64,
    /// Sum of solve wall times; lifting excluded.
    pub solve_time_s: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub p_tilde: usize,
    /// Solves checked when `certify` is set, and how many failed.
    pub certified: usize,
    pub certificate_failures: Vec<(usize, KktCertificate)>,
}

impl SimulationRun {
    pub fn mean_kkt_solves(&self) -> f64 {
        if self.logs.is_empty() {
            return 0.0;
        }
        self.logs.iter().map(|l| l.kkt_solves as f64).sum::<f64>() / self.logs.len() as f64
    }

    pub fn max_mean_x1(&self) -> f64 {
        self.logs.iter().map(|l| l.mean_x1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_mean_x4(&self) -> f64 {
        self.logs.iter().map(|l| l.mean_x4).fold(f64::INFINITY, f64::min)
    }
}

pub fn write_step_log<W: std::io::Write>(out: W, logs: &[StepLog]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for l in logs {
        w.serialize(l)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_step_log(path: &Path, logs: &[StepLog]) -> Result<()> {
    write_step_log(std::fs::File::create(path)?, logs)
}

/// Applied stage cost with the stage-0 weights.
fn stage_cost(p: &ProblemDefinition, x: &Vector, u: &Vector, u_prev: &Vector) -> f64 {
    let w = &p.weights;
    let du = u - u_prev;
    x.dot(&(&w.q[0] * x)) + 2.0 * x.dot(&(&w.m[0] * u)) + u.dot(&(&w.r[0] * u)) + du.dot(&(&w.v[0] * &du))
}

struct Plant {
    fd: Option<(FdPlant, Observer, Vector)>,
    x: Vector,
}

/// Everything the loop needs besides the QP.
struct Context {
    input_scale: f64,
    gram: Option<Mat>,
    mean_rows: Option<(Vector, Vector)>,
}

impl Context {
    fn norm(&self, x: &Vector) -> f64 {
        match &self.gram {
            Some(g) => x.dot(&(g * x)).max(0.0).sqrt(),
            None => x.norm(),
        }
    }
}

fn solve_step(
    qp: &LiftedQP,
    theta: &Parameter,
    warm: &ActiveSet,
    tol: &Tolerances,
    alg: Algorithm,
) -> Result<SolveResult> {
    match alg {
        Algorithm::Empc => solver::solve_with(qp, theta, warm, tol, SolveOptions { track_visited: true }),
        Algorithm::EmpcF => solver::solve_with(qp, theta, warm, tol, SolveOptions { track_visited: false }),
        Algorithm::DualAscent => oracle::dual_ascent_result(qp, theta, tol, DualAscentOptions::default()),
    }
}

/// Runs the loop from `x0` (the benchmark initial condition when `None`).
pub fn run_closed_loop(cfg: &SimulationConfig, problem: &ProblemDefinition, x0: Option<&Vector>) -> Result<SimulationRun> {
    let qp = lifting::build(problem)?;
    run_closed_loop_lifted(cfg, problem, &qp, x0)
}

pub fn run_closed_loop_lifted(
    cfg: &SimulationConfig,
    problem: &ProblemDefinition,
    qp: &LiftedQP,
    x0: Option<&Vector>,
) -> Result<SimulationRun> {
    let info = problem.benchmark.as_ref();
    let mut cfg = cfg.clone();
    if let Some(info) = info {
        cfg.h = info.config.h;
    }
    let steps = cfg.steps()?;
    let nx = problem.nx();
    let nu = problem.nu();
    let tol = cfg.tolerances.unwrap_or_else(|| Tolerances::for_qp(qp));

    let galerkin = match info {
        Some(i) => Some(beam::assemble(&i.config.params)?),
        None => None,
    };
    let ctx = Context {
        input_scale: info.map_or(1.0, |i| i.input_scale),
        gram: galerkin.as_ref().map(|g| g.gram.clone()),
        mean_rows: info.map(|i| (Vector::from_vec(i.mean_x1.clone()), Vector::from_vec(i.mean_x4.clone()))),
    };

    let mut plant = match cfg.mode {
        PlantMode::Perfect => {
            let x = match (x0, info) {
                (Some(x), _) => x.clone(),
                (None, Some(i)) => Vector::from_vec(i.initial_state.clone()),
                (None, None) => return Err(Error::Invalid("initial state required for a non-benchmark problem".into())),
            };
            Plant { fd: None, x }
        }
        PlantMode::FiniteDifference => {
            let (i, g) = match (info, &galerkin) {
                (Some(i), Some(g)) => (i, g),
                _ => return Err(Error::Invalid("finite-difference mode needs a beam benchmark problem".into())),
            };
            let fd = FdPlant::new(i.config.params, BENCHMARK_GRID_POINTS)?;
            let obs = Observer::new(&g.basis, &fd)?;
            let y = fd.sample(beam::initial_profile);
            let x = obs.observe(&y);
            Plant { fd: Some((fd, obs, y)), x }
        }
    };
    if plant.x.len() != nx {
        return Err(Error::dim("initial state", nx, plant.x.len()));
    }

    let plant_norm = |p: &Plant| match &p.fd {
        Some((fd, _, y)) => fd.l2_norm(y),
        None => ctx.norm(&p.x),
    };
    let plant_means = |p: &Plant| match (&p.fd, &ctx.mean_rows) {
        (Some((fd, _, y)), _) => (fd.mean(y, 0), fd.mean(y, 3)),
        (None, Some((m1, m4))) => (m1.dot(&p.x), m4.dot(&p.x)),
        (None, None) => (f64::NAN, f64::NAN),
    };

    let initial_norm = plant_norm(&plant);
    let mut u_prev = Vector::zeros(nu);
    let mut warm = ActiveSet::empty(qp.p_tilde());
    let mut logs = Vec::with_capacity(steps);
    let mut cumulative = 0.0;
    let mut solve_time = 0.0;
    let mut certified = 0;
    let mut certificate_failures = Vec::new();

    for n in 0..steps {
        let t = n as f64 * cfg.h;
        let theta = Parameter::new(plant.x.clone(), u_prev.clone());
        let start = if cfg.cold_start { ActiveSet::empty(qp.p_tilde()) } else { warm.clone() };
        let res = solve_step(qp, &theta, &start, &tol, cfg.algorithm)?;
        if res.status != SolveStatus::Optimal {
            let reason = match (res.status, cfg.mode, n) {
                (SolveStatus::Infeasible, PlantMode::Perfect, n) if n > 0 => format!(
                    "no sufficient active set at t = {t:.6} after a feasible start; recursive feasibility violated"
                ),
                (s, _, _) => format!("solver returned {} at t = {t:.6}", s.as_str()),
            };
            return Err(Error::ClosedLoop {
                step: n,
                reason,
                budget: res.status == SolveStatus::BudgetExhausted,
            });
        }
        solve_time += res.stats.wall_time_s;
        if cfg.certify && cfg.algorithm != Algorithm::DualAscent {
            let c = res.certificate(qp, &theta)?;
            certified += 1;
            if !c.passes() {
                certificate_failures.push((n, c));
            }
        }
        let u = res.u_first.clone();
        let j_opt = qp.evaluate_lifted_cost(&res.u_seq, &theta)?;
        cumulative += stage_cost(problem, &plant.x, &u, &u_prev);
        let (m1, m4) = plant_means(&plant);
        logs.push(StepLog {
            step: n,
            t,
            u1: ctx.input_scale * u[0],
            u2: if nu > 1 { ctx.input_scale * u[1] } else { 0.0 },
            j_opt,
            cumulative_cost: cumulative,
            mean_x1: m1,
            mean_x4: m4,
            active_set: res.active_set.to_hex(),
            candidates_visited: res.stats.candidates_visited,
            licq_failures: res.stats.licq_failures,
            kkt_solves: res.stats.kkt_solves,
            solve_time_s: res.stats.wall_time_s,
            state_norm: plant_norm(&plant),
        });

        match &mut plant.fd {
            None => plant.x = problem.plant.step(&plant.x, &u),
            Some((fd, obs, y)) => {
                let phys = [ctx.input_scale * u[0], ctx.input_scale * u[1]];
                *y = fd.step(y, phys, cfg.h)?;
                plant.x = obs.observe(y);
            }
        }
        warm = res.active_set;
        u_prev = u;
    }

    Ok(SimulationRun {
        j_d: cumulative,
        solve_time_s: solve_time,
        initial_norm,
        final_norm: plant_norm(&plant),
        p_tilde: qp.p_tilde(),
        certified,
        certificate_failures,
        logs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub horizon: usize,
    pub algorithm: String,
    pub runtime_s: f64,
    #[serde(rename = "J_d")]
    pub j_d: f64,
    pub p_tilde: usize,
    pub log2_candidates: usize,
    /// `2^p̃`, the number of candidate active sets.
    #[serde(skip)]
    pub candidates: f64,
    /// Set when the closed loop aborted; `J_d` and `runtime_s` are then NaN.
    #[serde(skip)]
    pub failure: Option<String>,
}

pub fn candidate_count(p_tilde: usize) -> f64 {
    2f64.powi(p_tilde as i32)
}

/// Closed-loop cost and online solve time of the beam benchmark per horizon and
/// algorithm. A run that aborts is reported in its row, not as an error.
pub fn benchmark_sweep(
    horizons: &[usize],
    algorithms: &[Algorithm],
    base: &BenchmarkConfig,
    cfg: &SimulationConfig,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in horizons {
        let bc = BenchmarkConfig {
            horizon: n,
            ..base.clone()
        };
        let problem = beam::build_benchmark_problem(&bc)?;
        let qp = lifting::build(&problem)?;
        for &alg in algorithms {
            let run_cfg = SimulationConfig {
                algorithm: alg,
                ..cfg.clone()
            };
            let p = qp.p_tilde();
            let mut row = SweepRow {
                horizon: n,
                algorithm: alg.name().to_string(),
                runtime_s: f64::NAN,
                j_d: f64::NAN,
                p_tilde: p,
                log2_candidates: p,
                candidates: candidate_count(p),
                failure: None,
            };
            match run_closed_loop_lifted(&run_cfg, &problem, &qp, None) {
                Ok(run) => {
                    row.runtime_s = run.solve_time_s;
                    row.j_d = run.j_d;
                }
                Err(e @ Error::ClosedLoop { .. }) => row.failure = Some(e.to_string()),
                Err(e) => return Err(e),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn write_sweep<W: std::io::Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
