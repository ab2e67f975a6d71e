//! `empc` command line. Exit codes: 0 ok, 1 usage or invalid input,
//! 2 infeasible, 3 KKT-solve budget exhausted, 4 I/O.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::beam::{self, BenchmarkConfig, BoundScaling};
use crate::error::{Error, Result};
use crate::lifting::{self, LiftedQP};
use crate::linalg::{Mat, Vector};
use crate::oracle::{self, DualAscentOptions};
use crate::problem::{Parameter, ProblemDefinition};
use crate::sim::{self, Algorithm, PlantMode, SimulationConfig};
use crate::solver::{self, ActiveSet, SolveOptions, SolveResult, SolveStatus, Tolerances};
use crate::testing::{self, RandomSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "empc", version, arg_required_else_help = true, about = "Region-free explicit MPC: lifting, active-set solver, beam benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Condense a problem and dump H, F, G, S, W and the constant term
    Lift(LiftArgs),
    /// Solve the pQP for one parameter
    Solve(SolveArgs),
    /// Run the closed loop and write one CSV row per step
    Simulate(SimulateArgs),
    /// Closed-loop cost and solve time of the beam benchmark over horizons
    Benchmark(BenchmarkArgs),
    /// Beam benchmark utilities
    Beam {
        #[command(subcommand)]
        command: BeamCommand,
    },
    /// Write a seeded random test problem
    Random(RandomArgs),
}

#[derive(Subcommand, Debug)]
enum BeamCommand {
    /// Assemble the beam problem and write it as JSON
    Build(BeamBuildArgs),
}

#[derive(Args, Debug)]
struct LiftArgs {
    /// Problem JSON
    #[arg(long)]
    problem: PathBuf,
    /// Output directory for the matrix dumps
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct TolArgs {
    /// Maximum number of KKT solves per call
    #[arg(long)]
    budget: Option<usize>,
    /// Slack tolerance (default 1e-9 (1 + max|W|))
    #[arg(long)]
    tol_violation: Option<f64>,
    /// Multiplier tolerance (default 1e-9 (1 + max|W|))
    #[arg(long)]
    tol_lambda: Option<f64>,
    /// Relative eigenvalue threshold for singular KKT matrices (default 1e-10)
    #[arg(long)]
    tol_singular: Option<f64>,
}

impl TolArgs {
    fn resolve(&self, qp: &LiftedQP) -> Tolerances {
        let mut t = Tolerances::for_qp(qp);
        if let Some(b) = self.budget {
            t.max_kkt_solves = b;
        }
        if let Some(v) = self.tol_violation {
            t.tol_violation = v;
        }
        if let Some(v) = self.tol_lambda {
            t.tol_lambda = v;
        }
        if let Some(v) = self.tol_singular {
            t.tol_singular = v;
        }
        t
    }

    fn any(&self) -> bool {
        self.budget.is_some() || self.tol_violation.is_some() || self.tol_lambda.is_some() || self.tol_singular.is_some()
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OracleKind {
    Enumerate,
    Dual,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Stacked parameter (x, u_prev), comma separated; defaults to the
    /// benchmark initial state with u_prev = 0
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Option<Vec<f64>>,
    /// Warm-start active set as a hex bitmask, bit k = constraint k
    #[arg(long, default_value = "0x0")]
    warm: String,
    /// Search without the visited set
    #[arg(long)]
    no_visited: bool,
    #[command(flatten)]
    tol: TolArgs,
    /// Use a reference solver instead of the active-set search
    #[arg(long, value_enum)]
    oracle: Option<OracleKind>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Perfect,
    Fd,
}

impl From<ModeArg> for PlantMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Perfect => PlantMode::Perfect,
            ModeArg::Fd => PlantMode::FiniteDifference,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AlgArg {
    #[value(name = "eMPC", alias = "empc")]
    Empc,
    #[value(name = "eMPCf", alias = "empcf")]
    EmpcF,
    #[value(name = "dual")]
    Dual,
}

impl From<AlgArg> for Algorithm {
    fn from(a: AlgArg) -> Self {
        match a {
            AlgArg::Empc => Algorithm::Empc,
            AlgArg::EmpcF => Algorithm::EmpcF,
            AlgArg::Dual => Algorithm::DualAscent,
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_enum, default_value = "perfect")]
    mode: ModeArg,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    /// Sampling period for problems without benchmark data
    #[arg(long)]
    h: Option<f64>,
    /// Initial state, comma separated; defaults to the benchmark initial state
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "eMPC")]
    algorithm: AlgArg,
    /// Shorthand for --algorithm eMPCf
    #[arg(long)]
    no_visited: bool,
    /// Warm start every step from the empty set
    #[arg(long)]
    cold: bool,
    #[command(flatten)]
    tol: TolArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write 0 in the wall-time column so repeated runs are byte-identical
    #[arg(long)]
    no_timing: bool,
    /// Step log CSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50")]
    horizons: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "eMPC,eMPCf")]
    algorithms: Vec<AlgArg>,
    #[arg(long, value_enum, default_value = "perfect")]
    mode: ModeArg,
    #[arg(long, default_value_t = 6.0)]
    t_end: f64,
    #[arg(long, value_enum, default_value = "sqrt-h")]
    bound_scaling: ScalingArg,
    /// Write 0 in the runtime column
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScalingArg {
    /// Discrete input bounded by √h·u
    SqrtH,
    /// Discrete input bounded by u/√h
    InvSqrtH,
}

impl From<ScalingArg> for BoundScaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::SqrtH => BoundScaling::SqrtH,
            ScalingArg::InvSqrtH => BoundScaling::InvSqrtH,
        }
    }
}

#[derive(Args, Debug)]
struct BeamBuildArgs {
    #[arg(long, default_value_t = 30)]
    horizon: usize,
    /// Sampling period (default 2^-7)
    #[arg(long)]
    h: Option<f64>,
    /// Basis functions per component
    #[arg(long, default_value_t = 9)]
    n_basis: usize,
    #[arg(long, value_enum, default_value = "sqrt-h")]
    bound_scaling: ScalingArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RandomArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_IO,
        Error::ClosedLoop { budget: true, .. } => EXIT_BUDGET,
        Error::ClosedLoop { budget: false, .. } => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Lift(a) => lift(a),
        Command::Solve(a) => solve(a),
        Command::Simulate(a) => simulate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Beam {
            command: BeamCommand::Build(a),
        } => beam_build(a),
        Command::Random(a) => random(a),
    }
}

fn load(path: &Path) -> Result<ProblemDefinition> {
    ProblemDefinition::load(path)
}

fn lift(a: LiftArgs) -> Result<i32> {
    let p = load(&a.problem)?;
    let qp = lifting::build(&p)?;
    std::fs::create_dir_all(&a.out)?;
    let w = &qp.constraints.w;
    let dumps: [(&str, Mat); 6] = [
        ("H", qp.cost.h.clone()),
        ("F", qp.cost.f.clone()),
        ("const", qp.cost.const_op.clone()),
        ("G", qp.constraints.g.clone()),
        ("S", qp.constraints.s.clone()),
        ("W", Mat::from_column_slice(w.len(), 1, w.as_slice())),
    ];
    for (name, m) in &dumps {
        crate::io::save_matrix(&a.out.join(format!("{name}.txt")), m)?;
    }
    println!(
        "N = {}, n_x = {}, n_u = {}, p_tilde = {}, coercivity = {:.6e}",
        qp.dims.horizon,
        qp.dims.nx,
        qp.dims.nu,
        qp.p_tilde(),
        qp.cost.eps
    );
    Ok(EXIT_OK)
}

fn default_theta(p: &ProblemDefinition) -> Result<Parameter> {
    match &p.benchmark {
        Some(info) => Ok(Parameter::from_state(Vector::from_vec(info.initial_state.clone()), p.nu())),
        None => Err(Error::Invalid("--theta is required for problems without benchmark data".into())),
    }
}

fn fmt_vec(v: &Vector) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

fn solve(a: SolveArgs) -> Result<i32> {
    let p = load(&a.problem)?;
    let qp = lifting::build(&p)?;
    let theta = match &a.theta {
        Some(t) => {
            let v = Vector::from_vec(t.clone());
            if v.len() != qp.dims.ntheta() {
                return Err(Error::dim("--theta", qp.dims.ntheta(), v.len()));
            }
            Parameter::from_stacked(&v, p.nx())
        }
        None => default_theta(&p)?,
    };
    let tol = a.tol.resolve(&qp);
    let warm = ActiveSet::from_hex(qp.p_tilde(), &a.warm)
        .ok_or_else(|| Error::Invalid(format!("--warm {:?} is not a hex mask over {} constraints", a.warm, qp.p_tilde())))?;
    let res: SolveResult = match a.oracle {
        None => solver::solve_with(&qp, &theta, &warm, &tol, SolveOptions { track_visited: !a.no_visited })?,
        Some(OracleKind::Enumerate) => oracle::enumerate(&qp, &theta, &tol)?,
        Some(OracleKind::Dual) => oracle::dual_ascent_result(&qp, &theta, &tol, DualAscentOptions::default())?,
    };
    let mut out = std::io::stdout().lock();
    writeln!(out, "status = {}", res.status.as_str())?;
    if res.is_optimal() {
        writeln!(out, "z* = {}", fmt_vec(&res.z_star))?;
        writeln!(out, "u* = {}", fmt_vec(&res.u_seq))?;
        writeln!(out, "active set = {}", res.active_set.to_hex())?;
        writeln!(out, "J* = {}", qp.evaluate_lifted_cost(&res.u_seq, &theta)?)?;
    }
    writeln!(
        out,
        "candidates = {}, licq failures = {}, kkt solves = {}, time = {:.3e} s",
        res.stats.candidates_visited, res.stats.licq_failures, res.stats.kkt_solves, res.stats.wall_time_s
    )?;
    Ok(match res.status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::BudgetExhausted => EXIT_BUDGET,
    })
}

fn simulate(a: SimulateArgs) -> Result<i32> {
    let p = load(&a.problem)?;
    let qp = lifting::build(&p)?;
    let mut cfg = SimulationConfig {
        t_end: a.t_end,
        mode: a.mode.into(),
        algorithm: if a.no_visited { Algorithm::EmpcF } else { a.algorithm.into() },
        cold_start: a.cold,
        seed: a.seed,
        tolerances: a.tol.any().then(|| a.tol.resolve(&qp)),
        ..SimulationConfig::default()
    };
    if let Some(h) = a.h {
        cfg.h = h;
    }
    let x0 = a.x0.map(Vector::from_vec);
    let mut run = sim::run_closed_loop_lifted(&cfg, &p, &qp, x0.as_ref())?;
    if a.no_timing {
        run.logs.iter_mut().for_each(|l| l.solve_time_s = 0.0);
    }
    match &a.out {
        Some(path) => sim::save_step_log(path, &run.logs)?,
        None => sim::write_step_log(std::io::stdout().lock(), &run.logs)?,
    }
    eprintln!(
        "steps = {}, J_d = {:.6}, solve time = {:.3e} s, mean kkt solves = {:.3}",
        run.logs.len(),
        run.j_d,
        run.solve_time_s,
        run.mean_kkt_solves()
    );
    Ok(EXIT_OK)
}

fn benchmark(a: BenchmarkArgs) -> Result<i32> {
    let base = BenchmarkConfig {
        bound_scaling: a.bound_scaling.into(),
        ..BenchmarkConfig::default()
    };
    let cfg = SimulationConfig {
        t_end: a.t_end,
        mode: a.mode.into(),
        ..SimulationConfig::default()
    };
    let algs: Vec<Algorithm> = a.algorithms.iter().map(|&x| x.into()).collect();
    let mut rows = sim::benchmark_sweep(&a.horizons, &algs, &base, &cfg)?;
    if a.no_timing {
        rows.iter_mut().filter(|r| r.failure.is_none()).for_each(|r| r.runtime_s = 0.0);
    }
    for r in &rows {
        if let Some(f) = &r.failure {
            eprintln!("N = {} {}: {f}", r.horizon, r.algorithm);
        }
    }
    match &a.out {
        Some(path) => sim::write_sweep(std::fs::File::create(path)?, &rows)?,
        None => sim::write_sweep(std::io::stdout().lock(), &rows)?,
    }
    Ok(EXIT_OK)
}

fn beam_build(a: BeamBuildArgs) -> Result<i32> {
    let defaults = BenchmarkConfig::default();
    let cfg = BenchmarkConfig {
        horizon: a.horizon,
        h: a.h.unwrap_or(defaults.h),
        bound_scaling: a.bound_scaling.into(),
        params: beam::BeamParams {
            n_basis: a.n_basis,
            ..defaults.params
        },
        ..defaults
    };
    let p = beam::build_benchmark_problem(&cfg)?;
    p.save(&a.out)?;
    println!(
        "n_x = {}, n_u = {}, N = {}, p_tilde = {}",
        p.nx(),
        p.nu(),
        p.horizon,
        p.constraints.total_rows()
    );
    Ok(EXIT_OK)
}

fn random(a: RandomArgs) -> Result<i32> {
    let (p, theta) = testing::random_problem(&mut testing::rng(a.seed), RandomSpec::default());
    p.save(&a.out)?;
    println!("theta = {}", fmt_vec(&theta.stacked()));
    Ok(EXIT_OK)
}
