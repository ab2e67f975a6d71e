//! Adaptive Dormand–Prince 4(5) over one interval, backed by `ode_solvers`.

use ode_solvers::dop_shared::{IntegrationError, OutputType};
use ode_solvers::{Dopri5, System};

use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-6, atol: 1e-9 }
    }
}

struct Rhs<F>(F);

impl<F: Fn(&Vector, &mut Vector)> System<f64, Vector> for Rhs<F> {
    fn system(&self, _t: f64, y: &Vector, dy: &mut Vector) {
        (self.0)(y, dy)
    }
}

/// Integrates the autonomous system `ẏ = f(y)` from `t0` to `t1`.
pub fn integrate<F>(f: F, y0: &Vector, t0: f64, t1: f64, opts: IntegratorOptions) -> Result<Vector>
where
    F: Fn(&Vector, &mut Vector),
{
    if t1 <= t0 {
        return Ok(y0.clone());
    }
    let span = t1 - t0;
    // Sparse output: one record per accepted step, the last one at t1.
    let mut stepper = Dopri5::from_param(
        Rhs(f),
        t0,
        t1,
        span,
        y0.clone(),
        opts.rtol,
        opts.atol,
        0.9,
        0.04,
        0.2,
        10.0,
        span,
        0.0,
        100_000,
        1000,
        OutputType::Sparse,
    );
    stepper.integrate().map_err(|e| match e {
        IntegrationError::StepSizeUnderflow { x } => Error::StepUnderflow { t: x },
        other => Error::NoConvergence(format!("integrator: {other}")),
    })?;
    stepper
        .y_out()
        .last()
        .cloned()
        .ok_or_else(|| Error::NoConvergence("integrator produced no output".into()))
}
