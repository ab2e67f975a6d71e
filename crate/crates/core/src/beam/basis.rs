use serde::{Deserialize, Serialize};

use super::legendre::value_and_derivative;
use super::BeamParams;

/// One trial/test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BasisFn {
    /// `L_k - L_{k+1}`: vanishes at ξ = 1.
    Minus(usize),
    /// `L_k + L_{k+1}`: vanishes at ξ = 0.
    Plus(usize),
    /// `ξ^m`: carries the controlled boundary value.
    Monomial(u32),
}

impl BasisFn {
    pub fn value(&self, xi: f64) -> f64 {
        self.eval(xi).0
    }

    pub fn deriv(&self, xi: f64) -> f64 {
        self.eval(xi).1
    }

    pub fn eval(&self, xi: f64) -> (f64, f64) {
        match *self {
            BasisFn::Minus(k) | BasisFn::Plus(k) => {
                let (a, da) = value_and_derivative(k, xi);
                let (b, db) = value_and_derivative(k + 1, xi);
                if matches!(self, BasisFn::Minus(_)) {
                    (a - b, da - db)
                } else {
                    (a + b, da + db)
                }
            }
            BasisFn::Monomial(m) => {
                let d = if m == 0 { 0.0 } else { m as f64 * xi.powi(m as i32 - 1) };
                (xi.powi(m as i32), d)
            }
        }
    }

    /// `∫₀¹ φ`, using `∫ L_k = δ_{k0}`.
    pub fn mean(&self) -> f64 {
        match *self {
            BasisFn::Minus(k) | BasisFn::Plus(k) => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            BasisFn::Monomial(m) => 1.0 / (m as f64 + 1.0),
        }
    }

    pub fn degree(&self) -> usize {
        match *self {
            BasisFn::Minus(k) | BasisFn::Plus(k) => k + 1,
            BasisFn::Monomial(m) => m as usize,
        }
    }
}

/// Functions per state component `x₁..x₄`, concatenated in that order in the
/// coefficient vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub components: [Vec<BasisFn>; 4],
}

impl Basis {
    pub fn len(&self, comp: usize) -> usize {
        self.components[comp].len()
    }

    pub fn dim(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }

    pub fn offset(&self, comp: usize) -> usize {
        self.components[..comp].iter().map(Vec::len).sum()
    }

    pub fn means(&self, comp: usize) -> Vec<f64> {
        self.components[comp].iter().map(BasisFn::mean).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.components.iter().flatten().map(BasisFn::degree).max().unwrap_or(0)
    }

    /// `Σ_k α_k φ_{comp,k}(ξ)` for the full coefficient vector `alpha`.
    pub fn reconstruct(&self, comp: usize, alpha: &[f64], xi: f64) -> f64 {
        let off = self.offset(comp);
        self.components[comp]
            .iter()
            .enumerate()
            .map(|(k, f)| alpha[off + k] * f.value(xi))
            .sum()
    }
}

/// Components 1 and 3 get `n_basis - 1` functions vanishing at ξ = 1 plus `ξ^m`;
/// components 2 and 4 get `n_basis` functions vanishing at ξ = 0.
pub fn build_basis(p: &BeamParams) -> Basis {
    let n = p.n_basis;
    let strain: Vec<BasisFn> = (0..n - 1)
        .map(BasisFn::Minus)
        .chain(std::iter::once(BasisFn::Monomial(p.m_boundary)))
        .collect();
    let momentum: Vec<BasisFn> = (0..n).map(BasisFn::Plus).collect();
    Basis {
        components: [strain.clone(), momentum.clone(), strain, momentum],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_conditions() {
        let b = build_basis(&BeamParams::default());
        for comp in [0, 2] {
            for f in &b.components[comp] {
                match f {
                    BasisFn::Monomial(_) => assert_eq!(f.value(1.0), 1.0),
                    _ => assert!(f.value(1.0).abs() < 1e-14),
                }
            }
        }
        for comp in [1, 3] {
            for f in &b.components[comp] {
                assert!(f.value(0.0).abs() < 1e-14);
            }
        }
        // first members in the one-based naming: L1 - L2 and L1 + L2
        assert!(BasisFn::Minus(1).value(1.0).abs() < 1e-15);
        assert!(BasisFn::Plus(1).value(0.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_36() {
        let b = build_basis(&BeamParams::default());
        assert_eq!(b.dim(), 36);
        assert_eq!(b.offset(3), 27);
    }

    #[test]
    fn means_match_quadrature() {
        let b = build_basis(&BeamParams::default());
        for f in b.components.iter().flatten() {
            let q = super::super::legendre::integrate(|x| f.value(x), 13);
            assert!((q - f.mean()).abs() < 1e-14, "{f:?}");
        }
    }
}
