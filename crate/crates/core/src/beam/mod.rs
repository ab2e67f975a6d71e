//! Timoshenko beam benchmark: Legendre spectral-Galerkin prediction model,
//! Cayley discretization, MPC weights and constraints, and a finite-difference
//! plant.

pub mod basis;
pub mod benchmark;
pub mod boundary;
pub mod cayley;
pub mod fd;
pub mod galerkin;
pub mod legendre;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use basis::{build_basis, Basis, BasisFn};
pub use benchmark::{
    build_benchmark_problem, initial_profile, project_initial_condition, BenchmarkConfig, BenchmarkInfo, BoundScaling,
    Projection,
};
pub use boundary::check_boundary_matrices;
pub use cayley::{cayley_discretize, DiscretePlant};
pub use fd::{fd_plant_step, FdPlant, Observer, BENCHMARK_GRID_POINTS};
pub use galerkin::{assemble, GalerkinSystem};
pub use legendre::legendre_shifted;

/// Constant physical coefficients and basis sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    pub rho: f64,
    pub i_rho: f64,
    pub ei: f64,
    pub k: f64,
    /// Functions per state component.
    pub n_basis: usize,
    /// Exponent of the boundary function `ξ^m`.
    pub m_boundary: u32,
}

impl Default for BeamParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            i_rho: 1.0,
            ei: 1.0,
            k: 1.0,
            n_basis: 9,
            m_boundary: 12,
        }
    }
}

impl BeamParams {
    pub fn validate(&self) -> Result<()> {
        let coeffs = [self.rho, self.i_rho, self.ei, self.k];
        if coeffs.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::Invalid(format!("beam coefficients must be positive: {coeffs:?}")));
        }
        if self.n_basis < 2 {
            return Err(Error::Invalid(format!("n_basis must be >= 2, got {}", self.n_basis)));
        }
        if self.m_boundary < 1 {
            return Err(Error::Invalid("boundary exponent must be >= 1".into()));
        }
        Ok(())
    }
}
