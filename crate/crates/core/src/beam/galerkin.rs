use super::basis::{build_basis, Basis};
use super::legendre::gauss_legendre;
use super::BeamParams;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// `𝓜 α̇ = 𝓚 α + 𝓑 u` in energy-weighted form: the test functions of component
/// ℓ are scaled by the ℓ-th Hamiltonian coefficient `(K, 1/ρ, EI, 1/I_ρ)`, which
/// makes `𝓚` skew-symmetric for any positive constant coefficients.
#[derive(Clone, Debug)]
pub struct GalerkinSystem {
    pub mass: Mat,
    pub stiff: Mat,
    pub input: Mat,
    /// Unweighted L² Gram matrix, block diagonal over components.
    pub gram: Mat,
    pub mass_condition: f64,
    pub basis: Basis,
    pub params: BeamParams,
}

impl GalerkinSystem {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }
}

struct Tab {
    val: Vec<Vec<f64>>,
    der: Vec<Vec<f64>>,
}

fn tabulate(basis: &Basis, comp: usize, nodes: &[f64]) -> Tab {
    let fns = &basis.components[comp];
    let mut val = Vec::with_capacity(fns.len());
    let mut der = Vec::with_capacity(fns.len());
    for f in fns {
        let (v, d): (Vec<f64>, Vec<f64>) = nodes.iter().map(|&x| f.eval(x)).unzip();
        val.push(v);
        der.push(d);
    }
    Tab { val, der }
}

fn dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

pub fn assemble(p: &BeamParams) -> Result<GalerkinSystem> {
    p.validate()?;
    let basis = build_basis(p);
    // exact for products of two basis functions
    let (nodes, w) = gauss_legendre(basis.max_degree() + 1);
    let tabs: Vec<Tab> = (0..4).map(|c| tabulate(&basis, c, &nodes)).collect();
    let dim = basis.dim();
    let off: Vec<usize> = (0..4).map(|c| basis.offset(c)).collect();
    let len: Vec<usize> = (0..4).map(|c| basis.len(c)).collect();
    let weight = [p.k, 1.0 / p.rho, p.ei, 1.0 / p.i_rho];

    let mut gram = Mat::zeros(dim, dim);
    let mut mass = Mat::zeros(dim, dim);
    for c in 0..4 {
        for m in 0..len[c] {
            for k in 0..len[c] {
                let g = dot(&w, &tabs[c].val[k], &tabs[c].val[m]);
                gram[(off[c] + m, off[c] + k)] = g;
                mass[(off[c] + m, off[c] + k)] = weight[c] * g;
            }
        }
    }

    let mut stiff = Mat::zeros(dim, dim);
    // (row component, column component, coefficient, derivative on trial, derivative on test)
    let couplings: [(usize, usize, f64, bool, bool); 6] = [
        (0, 1, p.k / p.rho, true, false),
        (0, 3, -p.k / p.i_rho, false, false),
        (1, 0, -p.k / p.rho, false, true),
        (2, 3, p.ei / p.i_rho, true, false),
        (3, 2, -p.ei / p.i_rho, false, true),
        (3, 0, p.k / p.i_rho, false, false),
    ];
    for &(row, col, coef, d_trial, d_test) in &couplings {
        for m in 0..len[row] {
            let test = if d_test { &tabs[row].der[m] } else { &tabs[row].val[m] };
            for k in 0..len[col] {
                let trial = if d_trial { &tabs[col].der[k] } else { &tabs[col].val[k] };
                stiff[(off[row] + m, off[col] + k)] = coef * dot(&w, trial, test);
            }
        }
    }

    let mut input = Mat::zeros(dim, 2);
    for (m, f) in basis.components[1].iter().enumerate() {
        input[(off[1] + m, 0)] = f.value(1.0) / p.rho;
    }
    for (m, f) in basis.components[3].iter().enumerate() {
        input[(off[3] + m, 1)] = f.value(1.0) / p.i_rho;
    }

    let ev = linalg::sym_eigenvalues(&mass);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 1e-14 * hi) {
        return Err(Error::Singular(format!("Galerkin mass matrix (eigenvalues {lo:.3e}..{hi:.3e})")));
    }

    Ok(GalerkinSystem {
        mass,
        stiff,
        input,
        gram,
        mass_condition: hi / lo,
        basis,
        params: *p,
    })
}
