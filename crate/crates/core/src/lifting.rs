//! Condensing of the MPC problem into the parametric QP
//!
//! ```text
//! min_z ½<Hz, z>   s.t.   W + Sθ - Gz >= 0,      z = u' + H⁻¹Fθ
//! ```
//!
//! `H` is factorized once; every later `H⁻¹` application goes through that
//! Cholesky factor. The products `H⁻¹F`, `H⁻¹Gᵀ` and `GH⁻¹Gᵀ` are cached since
//! the active-set search only ever needs sub-blocks of them.

use nalgebra::{Cholesky, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::problem::{Parameter, ProblemDefinition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub horizon: usize,
    pub nx: usize,
    pub nu: usize,
}

impl Dims {
    /// Number of decision variables `N · n_u`.
    pub fn nz(&self) -> usize {
        self.horizon * self.nu
    }

    pub fn ntheta(&self) -> usize {
        self.nx + self.nu
    }
}

/// Lifted prediction `x̃' = Ã x_n + B̃ u'`, states one step ahead of inputs.
#[derive(Clone, Debug)]
pub struct LiftedDynamics {
    pub a_tilde: Mat,
    pub b_tilde: Mat,
    /// Block lower-triangular kernel with `(i, j)` block `A^{i-j}`.
    pub kernel: Mat,
}

impl LiftedDynamics {
    pub fn build(a: &Mat, b: &Mat, horizon: usize) -> Self {
        let nx = a.nrows();
        let powers = matrix_powers(a, horizon);
        let mut kernel = Mat::zeros(horizon * nx, horizon * nx);
        for i in 0..horizon {
            for j in 0..=i {
                kernel.view_mut((i * nx, j * nx), (nx, nx)).copy_from(&powers[i - j]);
            }
        }
        let (a_tilde, b_tilde) = lift_ab(&powers, b, horizon);
        Self {
            a_tilde,
            b_tilde,
            kernel,
        }
    }
}

fn matrix_powers(a: &Mat, upto: usize) -> Vec<Mat> {
    let nx = a.nrows();
    let mut powers = Vec::with_capacity(upto + 1);
    powers.push(Mat::identity(nx, nx));
    for k in 1..=upto {
        let next = &powers[k - 1] * a;
        powers.push(next);
    }
    powers
}

fn lift_ab(powers: &[Mat], b: &Mat, horizon: usize) -> (Mat, Mat) {
    let nx = b.nrows();
    let nu = b.ncols();
    let mut a_tilde = Mat::zeros(horizon * nx, nx);
    let mut b_tilde = Mat::zeros(horizon * nx, horizon * nu);
    let ab: Vec<Mat> = powers.iter().take(horizon).map(|p| p * b).collect();
    for i in 0..horizon {
        a_tilde.view_mut((i * nx, 0), (nx, nx)).copy_from(&powers[i + 1]);
        for j in 0..=i {
            b_tilde.view_mut((i * nx, j * nu), (nx, nu)).copy_from(&ab[i - j]);
        }
    }
    (a_tilde, b_tilde)
}

/// Intermediate cost blocks, retained only on request.
#[derive(Clone, Debug)]
pub struct CostBlocks {
    pub q_p: Mat,
    pub r: Mat,
    pub m: Mat,
    pub m0: Mat,
    pub v: Mat,
    pub v0: Mat,
}

#[derive(Clone, Debug)]
pub struct QuadraticCost {
    pub h: Mat,
    pub f: Mat,
    /// `diag(Q_0 + ÃᵀQ̃_PÃ, V_0)`, the θ-only part of the cost.
    pub const_op: Mat,
    /// Smallest eigenvalue of `H`.
    pub eps: f64,
    pub blocks: Option<CostBlocks>,
}

/// Constraint blocks before condensing, retained only on request.
#[derive(Clone, Debug)]
pub struct ConstraintBlocks {
    pub cal_e0: Mat,
    pub cal_e1: Mat,
    pub e_tilde: Mat,
}

#[derive(Clone, Debug)]
pub struct ConstraintData {
    pub g: Mat,
    pub s: Mat,
    pub w: Vector,
    pub p_tilde: usize,
    /// Constraint index -> (stage, local row); stage `N` is the terminal set.
    pub stage_offsets: Vec<(usize, usize)>,
    /// True iff no row involves the state or the previous input through θ or x̃'.
    pub input_only: bool,
    pub blocks: Option<ConstraintBlocks>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LiftOptions {
    pub retain_blocks: bool,
}

#[derive(Clone, Debug)]
pub struct LiftedQP {
    pub cost: QuadraticCost,
    pub constraints: ConstraintData,
    pub dims: Dims,
    chol: Cholesky<f64, Dyn>,
    hinv_f: Mat,
    hinv_gt: Mat,
    ghg: Mat,
}

/// Smallest eigenvalue of the symmetric matrix `h`.
pub fn check_coercivity(h: &Mat) -> f64 {
    linalg::min_sym_eigenvalue(h)
}

pub fn tol_coercive(h: &Mat) -> f64 {
    1e-10 * (1.0 + linalg::spectral_norm(h))
}

pub fn build(p: &ProblemDefinition) -> Result<LiftedQP> {
    build_with(p, LiftOptions::default())
}

pub fn build_with(p: &ProblemDefinition, opts: LiftOptions) -> Result<LiftedQP> {
    crate::problem::validate(p, crate::problem::DEFAULT_TOL_PSD).into_result()?;

    let n = p.horizon;
    let nx = p.nx();
    let nu = p.nu();
    let nz = n * nu;
    let dims = Dims { horizon: n, nx, nu };
    let w = &p.weights;
    let model = &p.prediction_model;

    let powers = matrix_powers(&model.a, n);
    let (a_tilde, b_tilde) = lift_ab(&powers, &model.b, n);

    // Q̃_P = Q_1 ⊕ … ⊕ Q_{N-1} ⊕ P, applied blockwise.
    let q_block = |i: usize| if i + 1 < n { &w.q[i + 1] } else { &w.p };
    let mut qb = Mat::zeros(n * nx, nz);
    let mut qa = Mat::zeros(n * nx, nx);
    for i in 0..n {
        let rows = i * nx;
        qb.view_mut((rows, 0), (nx, nz))
            .copy_from(&(q_block(i) * b_tilde.view((rows, 0), (nx, nz))));
        qa.view_mut((rows, 0), (nx, nx))
            .copy_from(&(q_block(i) * a_tilde.view((rows, 0), (nx, nx))));
    }

    // M̃ has M_{i+1} at block (i, i+1); M̃_0 = [M_0 0 … 0].
    let mut m_tilde = Mat::zeros(n * nx, nz);
    for i in 0..n.saturating_sub(1) {
        m_tilde.view_mut((i * nx, (i + 1) * nu), (nx, nu)).copy_from(&w.m[i + 1]);
    }
    let mut m0 = Mat::zeros(nx, nz);
    m0.view_mut((0, 0), (nx, nu)).copy_from(&w.m[0]);

    let mut r_tilde = Mat::zeros(nz, nz);
    let mut v_tilde = Mat::zeros(nz, nz);
    for k in 0..n {
        r_tilde.view_mut((k * nu, k * nu), (nu, nu)).copy_from(&w.r[k]);
        v_tilde
            .view_mut((k * nu, k * nu), (nu, nu))
            .copy_from(&(&w.v[k] + &w.v[k + 1]));
        if k + 1 < n {
            let off = -&w.v[k + 1];
            v_tilde.view_mut((k * nu, (k + 1) * nu), (nu, nu)).copy_from(&off);
            v_tilde.view_mut(((k + 1) * nu, k * nu), (nu, nu)).copy_from(&off);
        }
    }
    let mut v0 = Mat::zeros(nz, nu);
    v0.view_mut((0, 0), (nu, nu)).copy_from(&(-&w.v[0]));

    let bt_m = b_tilde.transpose() * &m_tilde;
    let mut h = b_tilde.transpose() * &qb + &r_tilde + &v_tilde + &bt_m + bt_m.transpose();
    h = (&h + h.transpose()) * 0.5;

    let mut f = Mat::zeros(nz, nx + nu);
    f.view_mut((0, 0), (nz, nx))
        .copy_from(&(b_tilde.transpose() * &qa + m_tilde.transpose() * &a_tilde + m0.transpose()));
    f.view_mut((0, nx), (nz, nu)).copy_from(&v0);

    let mut const_op = Mat::zeros(nx + nu, nx + nu);
    let cx = &w.q[0] + a_tilde.transpose() * &qa;
    const_op.view_mut((0, 0), (nx, nx)).copy_from(&((&cx + cx.transpose()) * 0.5));
    const_op.view_mut((nx, nx), (nu, nu)).copy_from(&w.v[0]);

    let eps = check_coercivity(&h);
    let tol = tol_coercive(&h);
    if !(eps > tol) {
        return Err(Error::NotCoercive { eps, tol });
    }
    let chol = Cholesky::new(h.clone()).ok_or(Error::NotCoercive { eps, tol })?;

    let cost_blocks = opts.retain_blocks.then(|| {
        let mut q_p = Mat::zeros(n * nx, n * nx);
        for i in 0..n {
            q_p.view_mut((i * nx, i * nx), (nx, nx)).copy_from(q_block(i));
        }
        CostBlocks {
            q_p,
            r: r_tilde.clone(),
            m: m_tilde.clone(),
            m0: m0.clone(),
            v: v_tilde.clone(),
            v0: v0.clone(),
        }
    });

    let cons = &p.constraints;
    let p_tilde = cons.total_rows();
    let mut g = Mat::zeros(p_tilde, nz);
    // T = [Ẽ₁Ã, 0] + Ẽ₀, so that the u'-space constraint reads W - Tθ - Gu' >= 0.
    let mut t = Mat::zeros(p_tilde, nx + nu);
    let mut w_vec = Vector::zeros(p_tilde);
    let mut stage_offsets = Vec::with_capacity(p_tilde);
    let mut blocks = opts.retain_blocks.then(|| ConstraintBlocks {
        cal_e0: Mat::zeros(p_tilde, nx + nu),
        cal_e1: Mat::zeros(p_tilde, n * nx),
        e_tilde: Mat::zeros(p_tilde, nz),
    });

    let mut row = 0;
    for (k, st) in cons.stages.iter().enumerate() {
        let pk = st.rows();
        if pk == 0 {
            continue;
        }
        w_vec.rows_mut(row, pk).copy_from(&st.d);
        if k == 0 {
            t.view_mut((row, 0), (pk, nx)).copy_from(&st.cal_e);
            t.view_mut((row, nx), (pk, nu)).copy_from(&st.cal_f);
        } else {
            let xrows = (k - 1) * nx;
            t.view_mut((row, 0), (pk, nx))
                .copy_from(&(&st.cal_e * a_tilde.view((xrows, 0), (nx, nx))));
            let eb = &st.cal_e * b_tilde.view((xrows, 0), (nx, nz));
            g.view_mut((row, 0), (pk, nz)).copy_from(&eb);
            let mut gv = g.view_mut((row, (k - 1) * nu), (pk, nu));
            gv += &st.cal_f;
        }
        let mut gv = g.view_mut((row, k * nu), (pk, nu));
        gv += &st.e;

        if let Some(b) = blocks.as_mut() {
            if k == 0 {
                b.cal_e0.view_mut((row, 0), (pk, nx)).copy_from(&st.cal_e);
                b.cal_e0.view_mut((row, nx), (pk, nu)).copy_from(&st.cal_f);
            } else {
                b.cal_e1.view_mut((row, (k - 1) * nx), (pk, nx)).copy_from(&st.cal_e);
                b.e_tilde.view_mut((row, (k - 1) * nu), (pk, nu)).copy_from(&st.cal_f);
            }
            b.e_tilde.view_mut((row, k * nu), (pk, nu)).copy_from(&st.e);
        }
        stage_offsets.extend((0..pk).map(|r| (k, r)));
        row += pk;
    }
    let term = &cons.terminal;
    let ph = term.rows();
    if ph > 0 {
        let xrows = (n - 1) * nx;
        w_vec.rows_mut(row, ph).copy_from(&term.d_hat);
        t.view_mut((row, 0), (ph, nx))
            .copy_from(&(&term.e_hat * a_tilde.view((xrows, 0), (nx, nx))));
        g.view_mut((row, 0), (ph, nz))
            .copy_from(&(&term.e_hat * b_tilde.view((xrows, 0), (nx, nz))));
        let mut gv = g.view_mut((row, (n - 1) * nu), (ph, nu));
        gv += &term.f_hat;
        if let Some(b) = blocks.as_mut() {
            b.cal_e1.view_mut((row, xrows), (ph, nx)).copy_from(&term.e_hat);
            b.e_tilde.view_mut((row, (n - 1) * nu), (ph, nu)).copy_from(&term.f_hat);
        }
        stage_offsets.extend((0..ph).map(|r| (n, r)));
    }

    let input_only = cons.stages.iter().enumerate().all(|(k, st)| {
        st.cal_e.iter().all(|v| *v == 0.0) && (k > 0 || st.cal_f.iter().all(|v| *v == 0.0))
    }) && term.e_hat.iter().all(|v| *v == 0.0);

    let hinv_f = chol.solve(&f);
    let s = &g * &hinv_f - t;
    let hinv_gt = chol.solve(&g.transpose());
    let ghg = &g * &hinv_gt;
    let ghg = (&ghg + ghg.transpose()) * 0.5;

    Ok(LiftedQP {
        cost: QuadraticCost {
            h,
            f,
            const_op,
            eps,
            blocks: cost_blocks,
        },
        constraints: ConstraintData {
            g,
            s,
            w: w_vec,
            p_tilde,
            stage_offsets,
            input_only,
            blocks,
        },
        dims,
        chol,
        hinv_f,
        hinv_gt,
        ghg,
    })
}

impl LiftedQP {
    pub fn h(&self) -> &Mat {
        &self.cost.h
    }

    pub fn g(&self) -> &Mat {
        &self.constraints.g
    }

    pub fn p_tilde(&self) -> usize {
        self.constraints.p_tilde
    }

    pub fn nz(&self) -> usize {
        self.dims.nz()
    }

    /// `H⁻¹ v` through the cached factorization.
    pub fn solve_h(&self, v: &Vector) -> Vector {
        self.chol.solve(v)
    }

    /// `H⁻¹F`.
    pub fn hinv_f(&self) -> &Mat {
        &self.hinv_f
    }

    /// `H⁻¹Gᵀ`, one column per constraint.
    pub fn hinv_gt(&self) -> &Mat {
        &self.hinv_gt
    }

    /// `GH⁻¹Gᵀ`.
    pub fn ghg(&self) -> &Mat {
        &self.ghg
    }

    fn check_theta(&self, theta: &Vector) -> Result<()> {
        if theta.len() != self.dims.ntheta() {
            return Err(Error::dim("theta", self.dims.ntheta(), theta.len()));
        }
        Ok(())
    }

    fn check_z(&self, z: &Vector) -> Result<()> {
        if z.len() != self.nz() {
            return Err(Error::dim("decision vector", self.nz(), z.len()));
        }
        Ok(())
    }

    /// `W + Sθ`.
    pub fn rhs(&self, theta: &Vector) -> Vector {
        &self.constraints.w + &self.constraints.s * theta
    }

    /// `<const_op θ, θ> + <Hu', u'> + 2<u', Fθ>`.
    pub fn evaluate_lifted_cost(&self, u_seq: &Vector, theta: &Parameter) -> Result<f64> {
        let th = theta.stacked();
        self.check_theta(&th)?;
        self.check_z(u_seq)?;
        let c = &self.cost;
        Ok(th.dot(&(&c.const_op * &th)) + u_seq.dot(&(&c.h * u_seq)) + 2.0 * u_seq.dot(&(&c.f * &th)))
    }

    /// θ-only part of the cost, `<const_op θ, θ>`.
    pub fn constant_cost(&self, theta: &Vector) -> f64 {
        theta.dot(&(&self.cost.const_op * theta))
    }

    pub fn to_z(&self, u_seq: &Vector, theta: &Parameter) -> Result<Vector> {
        let th = theta.stacked();
        self.check_theta(&th)?;
        self.check_z(u_seq)?;
        Ok(u_seq + &self.hinv_f * th)
    }

    pub fn from_z(&self, z: &Vector, theta: &Parameter) -> Result<Vector> {
        let th = theta.stacked();
        self.check_theta(&th)?;
        self.check_z(z)?;
        Ok(z - &self.hinv_f * th)
    }

    /// Constraint slacks `W + Sθ - Gz`; entry `k` is nonnegative iff constraint `k` holds.
    pub fn eval_constraints(&self, z: &Vector, theta: &Parameter) -> Result<Vector> {
        let th = theta.stacked();
        self.check_theta(&th)?;
        self.check_z(z)?;
        Ok(self.rhs(&th) - &self.constraints.g * z)
    }

    /// Input-only constraints with strictly positive bounds: `z = H⁻¹Fθ` is a
    /// Slater point for every θ.
    pub fn check_easy_slater(&self) -> bool {
        self.constraints.input_only && self.constraints.w.iter().all(|v| *v > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{PlantModel, StageConstraint, StageConstraints, StageWeights};

    fn scalar(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    fn scalar_problem(q0: f64) -> ProblemDefinition {
        let model = PlantModel::new(scalar(1.0), scalar(1.0));
        let mut w = StageWeights::constant(&scalar(q0), &scalar(1.0), &scalar(0.0), &scalar(0.0), &scalar(1.0), 1);
        w.q[0] = scalar(q0);
        ProblemDefinition::with_perfect_model(model, w, StageConstraints::unconstrained(1, 1, 1), 1)
    }

    #[test]
    fn scalar_h_and_f() {
        let qp = build(&scalar_problem(3.7)).unwrap();
        assert!((qp.h()[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((qp.cost.f[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(qp.cost.f[(0, 1)], 0.0);
        // unconstrained minimizer -x/2
        let th = Parameter::from_state(Vector::from_vec(vec![1.0]), 1);
        let u = qp.from_z(&Vector::zeros(1), &th).unwrap();
        assert!((u[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn v_tilde_tridiagonal() {
        let model = PlantModel::new(scalar(0.3), scalar(0.8));
        let w = StageWeights::constant(&scalar(0.0), &scalar(0.0), &scalar(0.0), &scalar(1.0), &scalar(0.0), 2);
        let p = ProblemDefinition::with_perfect_model(model, w, StageConstraints::unconstrained(1, 1, 2), 2);
        let qp = build(&p).unwrap();
        let expected = Mat::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert!((qp.h() - expected).amax() < 1e-15);
    }

    #[test]
    fn lifted_scalar_cost() {
        let qp = build(&scalar_problem(1.0)).unwrap();
        let th = Parameter::from_state(Vector::from_vec(vec![1.0]), 1);
        let j = qp.evaluate_lifted_cost(&Vector::from_vec(vec![-0.5]), &th).unwrap();
        assert!((j - 1.5).abs() < 1e-15);
        let zero = Parameter::from_state(Vector::zeros(1), 1);
        assert_eq!(qp.evaluate_lifted_cost(&Vector::zeros(1), &zero).unwrap(), 0.0);
    }

    #[test]
    fn coercivity_identity() {
        assert!((check_coercivity(&Mat::identity(4, 4)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn not_coercive_rejected() {
        let model = PlantModel::new(scalar(1.0), scalar(1.0));
        let w = StageWeights::zeros(1, 1, 2);
        let p = ProblemDefinition::with_perfect_model(model, w, StageConstraints::unconstrained(1, 1, 2), 2);
        assert!(matches!(build(&p), Err(Error::NotCoercive { .. })));
    }

    #[test]
    fn z_map_identity_at_zero_theta() {
        let qp = build(&scalar_problem(1.0)).unwrap();
        let th = Parameter::from_state(Vector::zeros(1), 1);
        let u = Vector::from_vec(vec![0.3]);
        assert_eq!(qp.to_z(&u, &th).unwrap(), u);
    }

    #[test]
    fn easy_slater_cases() {
        let mut p = scalar_problem(1.0);
        p.constraints.stages[0] = StageConstraint {
            d: Vector::from_vec(vec![1.0, 2.0]),
            cal_e: Mat::zeros(2, 1),
            cal_f: Mat::zeros(2, 1),
            e: Mat::from_column_slice(2, 1, &[1.0, -1.0]),
        };
        let qp = build(&p).unwrap();
        assert!(qp.check_easy_slater());
        let th = Parameter::from_state(Vector::from_vec(vec![0.7]), 1);
        let z = qp.hinv_f() * th.stacked();
        let slack = qp.eval_constraints(&z, &th).unwrap();
        assert!((slack - &qp.constraints.w).amax() < 1e-14);

        let mut zero_bound = p.clone();
        zero_bound.constraints.stages[0].d[0] = 0.0;
        assert!(!build(&zero_bound).unwrap().check_easy_slater());

        let mut with_state = p.clone();
        with_state.constraints.stages[0].cal_e[(1, 0)] = 0.5;
        assert!(!build(&with_state).unwrap().check_easy_slater());
    }

    #[test]
    fn no_constraints_empty_slacks() {
        let qp = build(&scalar_problem(1.0)).unwrap();
        let th = Parameter::from_state(Vector::zeros(1), 1);
        assert_eq!(qp.eval_constraints(&Vector::zeros(1), &th).unwrap().len(), 0);
        assert_eq!(qp.p_tilde(), 0);
    }

    #[test]
    fn lifted_dynamics_structure() {
        let a = Mat::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.7]);
        let b = Mat::from_row_slice(2, 1, &[0.5, 1.0]);
        let ld = LiftedDynamics::build(&a, &b, 3);
        let a2 = &a * &a;
        assert!((ld.a_tilde.view((2, 0), (2, 2)) - &a2).amax() < 1e-15);
        assert!((ld.b_tilde.view((4, 0), (2, 1)) - &a2 * &b).amax() < 1e-15);
        assert_eq!(ld.b_tilde.view((0, 1), (2, 2)).amax(), 0.0);
        // Ã = kernel · [A; 0; 0], B̃ = kernel · (B ⊕ B ⊕ B)
        let mut a_col = Mat::zeros(6, 2);
        a_col.view_mut((0, 0), (2, 2)).copy_from(&a);
        assert!((&ld.kernel * a_col - &ld.a_tilde).amax() < 1e-14);
        let bdiag = linalg::block_diag(&[&b, &b, &b]);
        assert!((&ld.kernel * bdiag - &ld.b_tilde).amax() < 1e-14);
    }
}
