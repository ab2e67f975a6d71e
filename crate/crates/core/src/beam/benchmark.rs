use serde::{Deserialize, Serialize};

use super::cayley::cayley_discretize;
use super::galerkin::{assemble, GalerkinSystem};
use super::legendre::gauss_legendre;
use super::BeamParams;
use crate::error::Result;
use crate::linalg::{Mat, Vector};
use crate::problem::{PlantModel, ProblemDefinition, StageConstraint, StageConstraints, StageWeights};

/// How the physical input bounds translate into bounds on the discrete input `u'_k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundScaling {
    /// `√h·u_lo <= u'_k <= √h·u_hi`, so that `u'_k/√h` stays within the physical bounds.
    #[default]
    SqrtH,
    /// `u'_k` bounded by `u/√h`.
    InvSqrtH,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub params: BeamParams,
    pub horizon: usize,
    pub h: f64,
    pub q_prime: f64,
    pub r_prime: f64,
    pub v_prime: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    pub x1_hi: f64,
    pub x4_lo: f64,
    pub bound_scaling: BoundScaling,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            params: BeamParams::default(),
            horizon: 30,
            h: 2f64.powi(-7),
            q_prime: 100.0,
            r_prime: 1.0,
            v_prime: 0.1,
            u_lo: -0.5,
            u_hi: 0.5,
            x1_hi: 0.45,
            x4_lo: -0.3,
            bound_scaling: BoundScaling::SqrtH,
        }
    }
}

/// Data the closed loop needs beyond the optimization problem itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkInfo {
    pub config: BenchmarkConfig,
    /// Physical control is `input_scale · u'_k`.
    pub input_scale: f64,
    /// Row mapping coefficients to `∫₀¹ x₁`.
    pub mean_x1: Vec<f64>,
    pub mean_x4: Vec<f64>,
    pub initial_state: Vec<f64>,
    pub initial_projection_error: f64,
}

impl BenchmarkInfo {
    pub fn mean_x1_of(&self, x: &Vector) -> f64 {
        self.mean_x1.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn mean_x4_of(&self, x: &Vector) -> f64 {
        self.mean_x4.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Initial profiles `x₁ = x₄ = 0`, `x₂ = sin(πξ/2)`, `x₃ = cos(πξ/2)`.
pub fn initial_profile(comp: usize, xi: f64) -> f64 {
    let a = std::f64::consts::FRAC_PI_2 * xi;
    match comp {
        1 => a.sin(),
        2 => a.cos(),
        _ => 0.0,
    }
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub coeffs: Vector,
    /// `‖x - Πx‖_{L²}` over all four components.
    pub error: f64,
}

const PROJECTION_NODES: usize = 40;

/// L²-orthogonal projection of each component profile onto its basis span.
pub fn project_initial_condition<F: Fn(usize, f64) -> f64>(g: &GalerkinSystem, profile: F) -> Result<Projection> {
    let (nodes, w) = gauss_legendre(PROJECTION_NODES);
    let basis = &g.basis;
    let mut coeffs = Vector::zeros(basis.dim());
    for c in 0..4 {
        let off = basis.offset(c);
        let n = basis.len(c);
        let gram = g.gram.view((off, off), (n, n)).into_owned();
        let rhs = Vector::from_fn(n, |k, _| {
            let f = &basis.components[c][k];
            nodes.iter().zip(&w).map(|(x, wi)| wi * f.value(*x) * profile(c, *x)).sum()
        });
        let sol = gram
            .cholesky()
            .ok_or_else(|| crate::error::Error::Singular("component Gram matrix".into()))?
            .solve(&rhs);
        coeffs.rows_mut(off, n).copy_from(&sol);
    }
    let mut err2 = 0.0;
    for c in 0..4 {
        for (x, wi) in nodes.iter().zip(&w) {
            let r = profile(c, *x) - basis.reconstruct(c, coeffs.as_slice(), *x);
            err2 += wi * r * r;
        }
    }
    Ok(Projection {
        coeffs,
        error: err2.sqrt(),
    })
}

/// Prediction model, weights and constraints of the beam benchmark.
///
/// Stage 0 carries only the input box (4 rows); stages `1..N-1` add
/// `mean(x₁) <= x1_hi` and `mean(x₄) >= x4_lo` (6 rows). No terminal set and no
/// terminal weight, so `p̃ = 6N - 2`.
pub fn build_benchmark_problem(cfg: &BenchmarkConfig) -> Result<ProblemDefinition> {
    let g = assemble(&cfg.params)?;
    build_from_galerkin(cfg, &g)
}

pub fn build_from_galerkin(cfg: &BenchmarkConfig, g: &GalerkinSystem) -> Result<ProblemDefinition> {
    if cfg.horizon == 0 {
        return Err(crate::error::Error::Invalid("horizon must be >= 1".into()));
    }
    let d = cayley_discretize(g, cfg.h)?;
    let n = g.dim();
    let nu = 2;
    let h = cfg.h;

    let q = &g.gram * (h * cfg.q_prime);
    let r = Mat::identity(nu, nu) * cfg.r_prime;
    let v = Mat::identity(nu, nu) * (cfg.v_prime / (h * h));
    let mut weights = StageWeights::constant(&q, &r, &Mat::zeros(n, nu), &v, &Mat::zeros(n, n), cfg.horizon);
    weights.v[cfg.horizon] = Mat::zeros(nu, nu);

    let basis = &g.basis;
    let mut mean_x1 = vec![0.0; n];
    let mut mean_x4 = vec![0.0; n];
    for (k, m) in basis.means(0).into_iter().enumerate() {
        mean_x1[basis.offset(0) + k] = m;
    }
    for (k, m) in basis.means(3).into_iter().enumerate() {
        mean_x4[basis.offset(3) + k] = m;
    }

    let s = match cfg.bound_scaling {
        BoundScaling::SqrtH => h.sqrt(),
        BoundScaling::InvSqrtH => 1.0 / h.sqrt(),
    };
    let input_box = StageConstraint {
        d: Vector::from_vec(vec![s * cfg.u_hi, s * cfg.u_hi, -s * cfg.u_lo, -s * cfg.u_lo]),
        cal_e: Mat::zeros(4, n),
        cal_f: Mat::zeros(4, nu),
        e: Mat::from_row_slice(4, nu, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]),
    };
    let mut cal_e = Mat::zeros(2, n);
    for j in 0..n {
        cal_e[(0, j)] = mean_x1[j];
        cal_e[(1, j)] = -mean_x4[j];
    }
    let state_rows = StageConstraint {
        d: Vector::from_vec(vec![cfg.x1_hi, -cfg.x4_lo]),
        cal_e,
        cal_f: Mat::zeros(2, nu),
        e: Mat::zeros(2, nu),
    };
    let later = input_box.stack(&state_rows);
    let mut cons = StageConstraints::unconstrained(n, nu, cfg.horizon);
    cons.stages[0] = input_box;
    for k in 1..cfg.horizon {
        cons.stages[k] = later.clone();
    }

    let proj = project_initial_condition(g, initial_profile)?;
    let model = PlantModel::new(d.a, d.b);
    let mut p = ProblemDefinition::with_perfect_model(model, weights, cons, cfg.horizon);
    p.benchmark = Some(BenchmarkInfo {
        config: cfg.clone(),
        input_scale: 1.0 / h.sqrt(),
        mean_x1,
        mean_x4,
        initial_state: proj.coeffs.as_slice().to_vec(),
        initial_projection_error: proj.error,
    });
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_count() {
        for n in [1, 2, 10] {
            let cfg = BenchmarkConfig {
                horizon: n,
                ..BenchmarkConfig::default()
            };
            let p = build_benchmark_problem(&cfg).unwrap();
            assert_eq!(p.constraints.total_rows(), 6 * n - 2);
        }
    }

    #[test]
    fn bounds_scaled_by_sqrt_h() {
        let cfg = BenchmarkConfig {
            horizon: 2,
            ..BenchmarkConfig::default()
        };
        let p = build_benchmark_problem(&cfg).unwrap();
        let s = cfg.h.sqrt();
        assert!((p.constraints.stages[0].d[0] - 0.5 * s).abs() < 1e-15);
        assert!((p.constraints.stages[0].d[2] - 0.5 * s).abs() < 1e-15);
        assert_eq!(p.constraints.stages[1].d[4], 0.45);
        assert!((p.constraints.stages[1].d[5] - 0.3).abs() < 1e-15);
        let inv = BenchmarkConfig {
            bound_scaling: BoundScaling::InvSqrtH,
            ..cfg
        };
        let q = build_benchmark_problem(&inv).unwrap();
        assert!((q.constraints.stages[0].d[0] - 0.5 / s).abs() < 1e-12);
    }

    #[test]
    fn projection_cases() {
        let g = assemble(&BeamParams::default()).unwrap();
        let zero = project_initial_condition(&g, |_, _| 0.0).unwrap();
        assert_eq!(zero.coeffs.amax(), 0.0);

        // a basis member projects onto its unit vector
        let f = g.basis.components[1][1];
        let unit = project_initial_condition(&g, |c, x| if c == 1 { f.value(x) } else { 0.0 }).unwrap();
        let mut e = Vector::zeros(36);
        e[g.basis.offset(1) + 1] = 1.0;
        assert!((unit.coeffs - e).amax() < 1e-10);

        let ic = project_initial_condition(&g, initial_profile).unwrap();
        assert!(ic.error < 1e-6, "projection error {}", ic.error);
    }

    #[test]
    fn projection_error_decreases_with_basis_size() {
        let errs: Vec<f64> = [5, 7, 9]
            .iter()
            .map(|&n| {
                let p = BeamParams {
                    n_basis: n,
                    ..BeamParams::default()
                };
                let g = assemble(&p).unwrap();
                project_initial_condition(&g, initial_profile).unwrap().error
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn mean_row_matches_quadrature() {
        let cfg = BenchmarkConfig {
            horizon: 2,
            ..BenchmarkConfig::default()
        };
        let p = build_benchmark_problem(&cfg).unwrap();
        let info = p.benchmark.as_ref().unwrap();
        let g = assemble(&cfg.params).unwrap();
        let alpha = Vector::from_fn(36, |i, _| ((i * 7 % 11) as f64 - 5.0) / 3.0);
        let via_row = info.mean_x1_of(&alpha);
        let via_quad = super::super::legendre::integrate(|x| g.basis.reconstruct(0, alpha.as_slice(), x), 20);
        assert!((via_row - via_quad).abs() < 1e-10);
        let row = p.constraints.stages[1].cal_e.row(4).transpose();
        assert!((row.dot(&alpha) - via_row).abs() < 1e-12);
    }
}
