use super::galerkin::GalerkinSystem;
use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Clone, Debug)]
pub struct DiscretePlant {
    pub a: Mat,
    pub b: Mat,
    pub sigma: f64,
    pub h: f64,
}

pub fn cayley_discretize(g: &GalerkinSystem, h: f64) -> Result<DiscretePlant> {
    cayley(&g.mass, &g.stiff, &g.input, h)
}

/// `A = (σ𝓜 - 𝓚)⁻¹(σ𝓜 + 𝓚)`, `B = √(2σ)(σ𝓜 - 𝓚)⁻¹𝓑` with `σ = 2/h`.
pub fn cayley(mass: &Mat, stiff: &Mat, input: &Mat, h: f64) -> Result<DiscretePlant> {
    if !(h > 0.0) {
        return Err(Error::Invalid(format!("sampling period must be positive, got {h}")));
    }
    let sigma = 2.0 / h;
    let lhs = mass * sigma - stiff;
    let lu = lhs.lu();
    let a = lu
        .solve(&(mass * sigma + stiff))
        .ok_or_else(|| Error::Singular("Cayley resolvent σ𝓜 - 𝓚".into()))?;
    let b = lu
        .solve(input)
        .ok_or_else(|| Error::Singular("Cayley resolvent σ𝓜 - 𝓚".into()))?
        * (2.0 * sigma).sqrt();
    Ok(DiscretePlant { a, b, sigma, h })
}
