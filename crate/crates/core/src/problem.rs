//! MPC problem data: plant, stage weights, affine stage/terminal constraints.
//!
//! The cost evaluated here is the literal stage-wise recursion
//!
//! ```text
//! J(u', θ) = <P x'_N, x'_N> + <V_N u'_{N-1}, u'_{N-1}>
//!          + Σ_k <[Q_k M_k; M_kᵀ R_k][x'_k; u'_k], [x'_k; u'_k]>
//!          + Σ_k <V_k (u'_k - u'_{k-1}), u'_k - u'_{k-1}>
//! ```
//!
//! with `x'_{k+1} = A' x'_k + B' u'_k`, `x'_0 = x_n`, `u'_{-1} = u_{n-1}`. It is
//! intentionally independent of the condensed form in [`crate::lifting`] so that
//! the two can check each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, serde_mat, serde_vector, Mat, Vector};

/// Default relative PSD band.
pub const DEFAULT_TOL_PSD: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlantModel {
    #[serde(rename = "A", with = "serde_mat")]
    pub a: Mat,
    #[serde(rename = "B", with = "serde_mat")]
    pub b: Mat,
}

impl PlantModel {
    pub fn new(a: Mat, b: Mat) -> Self {
        Self { a, b }
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &Vector, u: &Vector) -> Vector {
        &self.a * x + &self.b * u
    }
}

/// Per-stage weights. `q`, `r`, `m` have `N` entries, `v` has `N + 1`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StageWeights {
    #[serde(rename = "Q", with = "serde_mat::vec")]
    pub q: Vec<Mat>,
    #[serde(rename = "R", with = "serde_mat::vec")]
    pub r: Vec<Mat>,
    /// Cross weights, `n_x × n_u`.
    #[serde(rename = "M", with = "serde_mat::vec")]
    pub m: Vec<Mat>,
    #[serde(rename = "V", with = "serde_mat::vec")]
    pub v: Vec<Mat>,
    #[serde(rename = "P", with = "serde_mat")]
    pub p: Mat,
}

impl StageWeights {
    /// Constant weights repeated over the horizon.
    pub fn constant(q: &Mat, r: &Mat, m: &Mat, v: &Mat, p: &Mat, horizon: usize) -> Self {
        Self {
            q: vec![q.clone(); horizon],
            r: vec![r.clone(); horizon],
            m: vec![m.clone(); horizon],
            v: vec![v.clone(); horizon + 1],
            p: p.clone(),
        }
    }

    pub fn zeros(nx: usize, nu: usize, horizon: usize) -> Self {
        Self::constant(
            &Mat::zeros(nx, nx),
            &Mat::zeros(nu, nu),
            &Mat::zeros(nx, nu),
            &Mat::zeros(nu, nu),
            &Mat::zeros(nx, nx),
            horizon,
        )
    }
}

/// `d - calE x'_k - calF u'_{k-1} - E u'_k >= 0`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StageConstraint {
    #[serde(with = "serde_vector")]
    pub d: Vector,
    #[serde(rename = "calE", with = "serde_mat")]
    pub cal_e: Mat,
    #[serde(rename = "calF", with = "serde_mat")]
    pub cal_f: Mat,
    #[serde(rename = "E", with = "serde_mat")]
    pub e: Mat,
}

impl StageConstraint {
    pub fn empty(nx: usize, nu: usize) -> Self {
        Self {
            d: Vector::zeros(0),
            cal_e: Mat::zeros(0, nx),
            cal_f: Mat::zeros(0, nu),
            e: Mat::zeros(0, nu),
        }
    }

    pub fn rows(&self) -> usize {
        self.d.len()
    }

    pub fn slack(&self, x: &Vector, u_prev: &Vector, u: &Vector) -> Vector {
        &self.d - &self.cal_e * x - &self.cal_f * u_prev - &self.e * u
    }

    /// Appends the rows of `other`.
    pub fn stack(&self, other: &StageConstraint) -> StageConstraint {
        let vstack = |a: &Mat, b: &Mat| {
            let mut m = Mat::zeros(a.nrows() + b.nrows(), a.ncols().max(b.ncols()));
            m.view_mut((0, 0), a.shape()).copy_from(a);
            m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
            m
        };
        let mut d = Vector::zeros(self.rows() + other.rows());
        d.rows_mut(0, self.rows()).copy_from(&self.d);
        d.rows_mut(self.rows(), other.rows()).copy_from(&other.d);
        StageConstraint {
            d,
            cal_e: vstack(&self.cal_e, &other.cal_e),
            cal_f: vstack(&self.cal_f, &other.cal_f),
            e: vstack(&self.e, &other.e),
        }
    }
}

/// `d_hat - E_hat x'_N - F_hat u'_{N-1} >= 0`; zero rows means no terminal set.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TerminalConstraint {
    #[serde(with = "serde_vector")]
    pub d_hat: Vector,
    #[serde(rename = "E_hat", with = "serde_mat")]
    pub e_hat: Mat,
    #[serde(rename = "F_hat", with = "serde_mat")]
    pub f_hat: Mat,
}

impl TerminalConstraint {
    pub fn none(nx: usize, nu: usize) -> Self {
        Self {
            d_hat: Vector::zeros(0),
            e_hat: Mat::zeros(0, nx),
            f_hat: Mat::zeros(0, nu),
        }
    }

    pub fn rows(&self) -> usize {
        self.d_hat.len()
    }

    pub fn slack(&self, x_terminal: &Vector, u_last: &Vector) -> Vector {
        &self.d_hat - &self.e_hat * x_terminal - &self.f_hat * u_last
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StageConstraints {
    pub stages: Vec<StageConstraint>,
    pub terminal: TerminalConstraint,
}

impl StageConstraints {
    pub fn unconstrained(nx: usize, nu: usize, horizon: usize) -> Self {
        Self {
            stages: vec![StageConstraint::empty(nx, nu); horizon],
            terminal: TerminalConstraint::none(nx, nu),
        }
    }

    /// Total row count `p̃ = Σ p_k + p̂`.
    pub fn total_rows(&self) -> usize {
        self.stages.iter().map(|s| s.rows()).sum::<usize>() + self.terminal.rows()
    }
}

/// `θ_n = [x_n; u_{n-1}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub x: Vector,
    pub u_prev: Vector,
}

impl Parameter {
    pub fn new(x: Vector, u_prev: Vector) -> Self {
        Self { x, u_prev }
    }

    /// Previous input defaults to zero.
    pub fn from_state(x: Vector, nu: usize) -> Self {
        Self {
            x,
            u_prev: Vector::zeros(nu),
        }
    }

    pub fn stacked(&self) -> Vector {
        let mut th = Vector::zeros(self.x.len() + self.u_prev.len());
        th.rows_mut(0, self.x.len()).copy_from(&self.x);
        th.rows_mut(self.x.len(), self.u_prev.len()).copy_from(&self.u_prev);
        th
    }

    pub fn from_stacked(theta: &Vector, nx: usize) -> Self {
        let nu = theta.len() - nx;
        Self {
            x: theta.rows(0, nx).into_owned(),
            u_prev: theta.rows(nx, nu).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.u_prev.iter()).all(|v| v.is_finite())
    }
}

/// The finite-horizon MPC problem, plus the plant the closed loop is run on.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemDefinition {
    pub plant: PlantModel,
    pub prediction_model: PlantModel,
    pub weights: StageWeights,
    pub constraints: StageConstraints,
    pub horizon: usize,
    /// Set by the beam benchmark builder; not part of the optimization problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<crate::beam::BenchmarkInfo>,
}

/// Outcome of [`validate`]: an empty issue list means the problem is valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(self.issues.join("; ")))
        }
    }
}

/// Per-stage constraint slacks of an input sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    pub stage_slacks: Vec<Vector>,
    pub terminal_slack: Vector,
}

impl Admissibility {
    /// Slacks stacked in the same order as the lifted constraint vector `W`.
    pub fn stacked(&self) -> Vector {
        let mut all: Vec<f64> = Vec::new();
        for s in &self.stage_slacks {
            all.extend(s.iter());
        }
        all.extend(self.terminal_slack.iter());
        Vector::from_vec(all)
    }
}

impl ProblemDefinition {
    /// Problem whose closed loop runs on the prediction model itself.
    pub fn with_perfect_model(
        model: PlantModel,
        weights: StageWeights,
        constraints: StageConstraints,
        horizon: usize,
    ) -> Self {
        Self {
            plant: model.clone(),
            prediction_model: model,
            weights,
            constraints,
            horizon,
            benchmark: None,
        }
    }

    pub fn nx(&self) -> usize {
        self.prediction_model.nx()
    }

    pub fn nu(&self) -> usize {
        self.prediction_model.nu()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut p: ProblemDefinition = serde_json::from_str(text)?;
        p.fix_empty_shapes();
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// JSON cannot carry the column count of a matrix with zero rows.
    fn fix_empty_shapes(&mut self) {
        let (nx, nu) = (self.nx(), self.nu());
        let fix = |m: &mut Mat, cols: usize| {
            if m.nrows() == 0 {
                *m = Mat::zeros(0, cols);
            }
        };
        for s in &mut self.constraints.stages {
            fix(&mut s.cal_e, nx);
            fix(&mut s.cal_f, nu);
            fix(&mut s.e, nu);
        }
        fix(&mut self.constraints.terminal.e_hat, nx);
        fix(&mut self.constraints.terminal.f_hat, nu);
    }

    fn check_theta(&self, theta: &Parameter) -> Result<()> {
        if theta.x.len() != self.nx() {
            return Err(Error::dim("parameter state", self.nx(), theta.x.len()));
        }
        if theta.u_prev.len() != self.nu() {
            return Err(Error::dim("parameter previous input", self.nu(), theta.u_prev.len()));
        }
        Ok(())
    }

    fn check_inputs(&self, u_seq: &Vector) -> Result<()> {
        let expected = self.horizon * self.nu();
        if u_seq.len() != expected {
            return Err(Error::dim("input sequence", expected, u_seq.len()));
        }
        Ok(())
    }

    fn input(&self, u_seq: &Vector, k: usize) -> Vector {
        let nu = self.nu();
        u_seq.rows(k * nu, nu).into_owned()
    }

    /// Predicted states `x'_0 .. x'_N` under the prediction model.
    pub fn predict(&self, u_seq: &Vector, theta: &Parameter) -> Result<Vec<Vector>> {
        self.check_theta(theta)?;
        self.check_inputs(u_seq)?;
        let mut xs = Vec::with_capacity(self.horizon + 1);
        xs.push(theta.x.clone());
        for k in 0..self.horizon {
            let next = self.prediction_model.step(&xs[k], &self.input(u_seq, k));
            xs.push(next);
        }
        Ok(xs)
    }
}

/// Checks dimensions, finiteness and semidefiniteness of all problem data.
pub fn validate(p: &ProblemDefinition, tol_psd: f64) -> ValidationReport {
    let mut issues = Vec::new();
    let n = p.horizon;
    let (nx, nu) = (p.nx(), p.nu());

    if n == 0 {
        issues.push("horizon must be >= 1".to_string());
    }

    for (name, model) in [("prediction_model", &p.prediction_model), ("plant", &p.plant)] {
        if model.a.shape() != (nx, nx) {
            issues.push(format!("{name}.A is {:?}, expected ({nx}, {nx})", model.a.shape()));
        }
        if model.b.shape() != (nx, nu) {
            issues.push(format!("{name}.B is {:?}, expected ({nx}, {nu})", model.b.shape()));
        }
        if !linalg::all_finite(&model.a) || !linalg::all_finite(&model.b) {
            issues.push(format!("{name} has non-finite entries"));
        }
    }

    let w = &p.weights;
    let lens = [("Q", w.q.len(), n), ("R", w.r.len(), n), ("M", w.m.len(), n), ("V", w.v.len(), n + 1)];
    for (name, got, want) in lens {
        if got != want {
            issues.push(format!("{name} has {got} stages, expected {want}"));
        }
    }

    let mut check_psd = |name: String, m: &Mat, shape: (usize, usize)| {
        if m.shape() != shape {
            issues.push(format!("{name} is {:?}, expected {:?}", m.shape(), shape));
            return;
        }
        if !linalg::all_finite(m) {
            issues.push(format!("{name} has non-finite entries"));
            return;
        }
        if !linalg::is_symmetric(m, 1e-12) {
            issues.push(format!("{name} not symmetric"));
        }
        if linalg::min_sym_eigenvalue(m) < linalg::psd_threshold(m, tol_psd) {
            issues.push(format!("{name} not PSD"));
        }
    };

    check_psd("P".into(), &w.p, (nx, nx));
    for (k, q) in w.q.iter().enumerate() {
        check_psd(format!("Q[{k}]"), q, (nx, nx));
    }
    for (k, r) in w.r.iter().enumerate() {
        check_psd(format!("R[{k}]"), r, (nu, nu));
    }
    for (k, v) in w.v.iter().enumerate() {
        check_psd(format!("V[{k}]"), v, (nu, nu));
    }
    for k in 0..n.min(w.q.len()).min(w.r.len()).min(w.m.len()) {
        let m = &w.m[k];
        if m.shape() != (nx, nu) {
            issues.push(format!("M[{k}] is {:?}, expected ({nx}, {nu})", m.shape()));
            continue;
        }
        if w.q[k].shape() != (nx, nx) || w.r[k].shape() != (nu, nu) {
            continue;
        }
        let mut joint = Mat::zeros(nx + nu, nx + nu);
        joint.view_mut((0, 0), (nx, nx)).copy_from(&w.q[k]);
        joint.view_mut((0, nx), (nx, nu)).copy_from(m);
        joint.view_mut((nx, 0), (nu, nx)).copy_from(&m.transpose());
        joint.view_mut((nx, nx), (nu, nu)).copy_from(&w.r[k]);
        if linalg::min_sym_eigenvalue(&joint) < linalg::psd_threshold(&joint, tol_psd) {
            issues.push(format!("cross block [[Q[{k}], M[{k}]], [M[{k}]ᵀ, R[{k}]]] not PSD"));
        }
    }

    let c = &p.constraints;
    if c.stages.len() != n {
        issues.push(format!("constraints have {} stages, expected {n}", c.stages.len()));
    }
    for (k, s) in c.stages.iter().enumerate() {
        let pk = s.rows();
        if s.cal_e.shape() != (pk, nx) || s.cal_f.shape() != (pk, nu) || s.e.shape() != (pk, nu) {
            issues.push(format!(
                "stage {k} constraint blocks inconsistent: d {pk}, calE {:?}, calF {:?}, E {:?}",
                s.cal_e.shape(),
                s.cal_f.shape(),
                s.e.shape()
            ));
        }
        if s.d.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            issues.push(format!("d[{k}] must be finite and nonnegative"));
        }
    }
    let t = &c.terminal;
    if t.e_hat.shape() != (t.rows(), nx) || t.f_hat.shape() != (t.rows(), nu) {
        issues.push(format!(
            "terminal constraint blocks inconsistent: d_hat {}, E_hat {:?}, F_hat {:?}",
            t.rows(),
            t.e_hat.shape(),
            t.f_hat.shape()
        ));
    }
    if t.d_hat.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        issues.push("d_hat must be finite and nonnegative".to_string());
    }

    ValidationReport { issues }
}

/// Cost by direct recursion over the prediction model.
pub fn evaluate_cost(p: &ProblemDefinition, u_seq: &Vector, theta: &Parameter) -> Result<f64> {
    let xs = p.predict(u_seq, theta)?;
    let w = &p.weights;
    let n = p.horizon;
    let quad = |m: &Mat, a: &Vector, b: &Vector| a.dot(&(m * b));

    let mut cost = quad(&w.p, &xs[n], &xs[n]);
    let u_last = p.input(u_seq, n - 1);
    cost += quad(&w.v[n], &u_last, &u_last);

    let mut u_prev = theta.u_prev.clone();
    for k in 0..n {
        let u = p.input(u_seq, k);
        let x = &xs[k];
        cost += quad(&w.q[k], x, x) + 2.0 * quad(&w.m[k], x, &u) + quad(&w.r[k], &u, &u);
        let du = &u - &u_prev;
        cost += quad(&w.v[k], &du, &du);
        u_prev = u;
    }
    Ok(cost)
}

/// Evaluates every stage and terminal constraint along the predicted trajectory.
pub fn check_admissible(p: &ProblemDefinition, u_seq: &Vector, theta: &Parameter) -> Result<Admissibility> {
    let xs = p.predict(u_seq, theta)?;
    let n = p.horizon;
    let mut stage_slacks = Vec::with_capacity(n);
    let mut u_prev = theta.u_prev.clone();
    for (k, stage) in p.constraints.stages.iter().enumerate() {
        let u = p.input(u_seq, k);
        stage_slacks.push(stage.slack(&xs[k], &u_prev, &u));
        u_prev = u;
    }
    let terminal_slack = p.constraints.terminal.slack(&xs[n], &p.input(u_seq, n - 1));
    let admissible = stage_slacks
        .iter()
        .chain(std::iter::once(&terminal_slack))
        .all(|s| s.iter().all(|v| *v >= 0.0));
    Ok(Admissibility {
        admissible,
        stage_slacks,
        terminal_slack,
    })
}

/// Solves `AᵀPA - P = -Q` by the doubling form of the series `Σ (Aᵀ)^k Q A^k`.
pub fn solve_discrete_lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    if !a.is_square() || q.shape() != a.shape() {
        return Err(Error::dim("Lyapunov operands", format!("{:?}", a.shape()), format!("{:?}", q.shape())));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let radius = a
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if radius >= 1.0 {
        return Err(Error::LyapunovDiverged { radius });
    }

    let mut p = q.clone();
    let mut ak = a.clone();
    for _ in 0..64 {
        p += ak.transpose() * &p * &ak;
        ak = &ak * &ak;
        if ak.amax() < 1e-18 {
            break;
        }
    }
    let p = (&p + p.transpose()) * 0.5;

    let residual = linalg::spectral_norm(&(a.transpose() * &p * a - &p + q));
    if residual > 1e-10 * linalg::spectral_norm(q).max(f64::MIN_POSITIVE) {
        return Err(Error::LyapunovDiverged { radius });
    }
    Ok(p)
}
