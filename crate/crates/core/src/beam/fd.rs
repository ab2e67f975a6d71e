//! Finite-difference model of the beam, used as the "true" plant.
//!
//! Each component lives on a uniform grid of `n` points. The first-derivative
//! operator is central in the interior and one-sided at both ends; with the
//! trapezoidal norm `P` it satisfies `PD + (PD)ᵀ = diag(-1, 0, …, 0, 1)`, so the
//! semi-discrete energy `½ Σ P_i (K x₁² + x₂²/ρ + EI x₃² + x₄²/I_ρ)` is conserved
//! for zero input. Boundary values are imposed by injection.

use super::basis::Basis;
use super::BeamParams;
use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorOptions};
use crate::linalg::{Mat, Vector};

pub const BENCHMARK_GRID_POINTS: usize = 127;

#[derive(Clone, Debug)]
pub struct FdPlant {
    pub params: BeamParams,
    pub n: usize,
    pub dx: f64,
    pub integrator: IntegratorOptions,
}

impl FdPlant {
    pub fn new(params: BeamParams, n: usize) -> Result<Self> {
        params.validate()?;
        if n < 3 {
            return Err(Error::Invalid(format!("grid needs at least 3 points, got {n}")));
        }
        Ok(Self {
            params,
            n,
            dx: 1.0 / (n - 1) as f64,
            integrator: IntegratorOptions::default(),
        })
    }

    pub fn state_dim(&self) -> usize {
        4 * self.n
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.dx).collect()
    }

    /// Trapezoidal weights, the diagonal of `P`.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.dx; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }

    /// Samples four profiles on the grid and imposes the zero-input boundary values.
    pub fn sample<F: Fn(usize, f64) -> f64>(&self, profile: F) -> Vector {
        let mut y = Vector::zeros(self.state_dim());
        for c in 0..4 {
            for (i, x) in self.grid().into_iter().enumerate() {
                y[c * self.n + i] = profile(c, x);
            }
        }
        self.inject(&mut y, [0.0, 0.0]);
        y
    }

    /// `x₂(0) = x₄(0) = 0`, `K x₁(1) = u₁`, `EI x₃(1) = u₂`.
    pub fn inject(&self, y: &mut Vector, u: [f64; 2]) {
        let n = self.n;
        y[n] = 0.0;
        y[3 * n] = 0.0;
        y[n - 1] = u[0] / self.params.k;
        y[3 * n - 1] = u[1] / self.params.ei;
    }

    fn diff(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        let inv = 1.0 / self.dx;
        out[0] = (f[1] - f[0]) * inv;
        for i in 1..n - 1 {
            out[i] = 0.5 * (f[i + 1] - f[i - 1]) * inv;
        }
        out[n - 1] = (f[n - 1] - f[n - 2]) * inv;
    }

    pub fn rhs(&self, y: &Vector, u: [f64; 2], dy: &mut Vector) {
        let n = self.n;
        let p = &self.params;
        let mut x = y.clone();
        self.inject(&mut x, u);
        let coef = [p.k, 1.0 / p.rho, p.ei, 1.0 / p.i_rho];
        let e: Vec<Vec<f64>> = (0..4)
            .map(|c| x.as_slice()[c * n..(c + 1) * n].iter().map(|v| v * coef[c]).collect())
            .collect();
        let mut de = vec![vec![0.0; n]; 4];
        for c in 0..4 {
            self.diff(&e[c], &mut de[c]);
        }
        for i in 0..n {
            dy[i] = de[1][i] - e[3][i];
            dy[n + i] = de[0][i];
            dy[2 * n + i] = de[3][i];
            dy[3 * n + i] = de[2][i] + e[0][i];
        }
        dy[n - 1] = 0.0;
        dy[n] = 0.0;
        dy[3 * n - 1] = 0.0;
        dy[3 * n] = 0.0;
    }

    pub fn energy(&self, y: &Vector) -> f64 {
        let p = &self.params;
        let coef = [p.k, 1.0 / p.rho, p.ei, 1.0 / p.i_rho];
        let w = self.weights();
        let mut e = 0.0;
        for c in 0..4 {
            for i in 0..self.n {
                let v = y[c * self.n + i];
                e += w[i] * coef[c] * v * v;
            }
        }
        0.5 * e
    }

    /// Trapezoidal `∫₀¹` of one component.
    pub fn mean(&self, y: &Vector, comp: usize) -> f64 {
        self.weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * y[comp * self.n + i])
            .sum()
    }

    /// Trapezoidal L² norm over all components.
    pub fn l2_norm(&self, y: &Vector) -> f64 {
        let w = self.weights();
        (0..4)
            .flat_map(|c| (0..self.n).map(move |i| (c, i)))
            .map(|(c, i)| w[i] * y[c * self.n + i].powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Holds `u_physical` over `[0, h]` and integrates the semi-discrete system.
    pub fn step(&self, y: &Vector, u_physical: [f64; 2], h: f64) -> Result<Vector> {
        let mut start = y.clone();
        self.inject(&mut start, u_physical);
        let mut out = integrate(|s, ds| self.rhs(s, u_physical, ds), &start, 0.0, h, self.integrator)?;
        self.inject(&mut out, u_physical);
        Ok(out)
    }
}

pub fn fd_plant_step(fd: &FdPlant, state: &Vector, u_physical: [f64; 2], h: f64) -> Result<Vector> {
    fd.step(state, u_physical, h)
}

/// Least-squares projection of grid profiles onto the Galerkin basis using
/// trapezoidal inner products.
#[derive(Clone, Debug)]
pub struct Observer {
    maps: Vec<Mat>,
    offsets: Vec<usize>,
    dim: usize,
    n: usize,
}

impl Observer {
    pub fn new(basis: &Basis, fd: &FdPlant) -> Result<Self> {
        let grid = fd.grid();
        let w = fd.weights();
        let mut maps = Vec::with_capacity(4);
        for c in 0..4 {
            let fns = &basis.components[c];
            let phi = Mat::from_fn(fd.n, fns.len(), |i, k| fns[k].value(grid[i]));
            let phi_w = Mat::from_fn(fns.len(), fd.n, |k, i| phi[(i, k)] * w[i]);
            let gram = &phi_w * &phi;
            let map = gram
                .cholesky()
                .ok_or_else(|| Error::Singular("trapezoidal Gram matrix".into()))?
                .solve(&phi_w);
            maps.push(map);
        }
        Ok(Self {
            maps,
            offsets: (0..4).map(|c| basis.offset(c)).collect(),
            dim: basis.dim(),
            n: fd.n,
        })
    }

    pub fn observe(&self, y: &Vector) -> Vector {
        let mut alpha = Vector::zeros(self.dim);
        for c in 0..4 {
            let seg = y.rows(c * self.n, self.n);
            let a = &self.maps[c] * seg;
            alpha.rows_mut(self.offsets[c], a.len()).copy_from(&a);
        }
        alpha
    }
}
