//! Region-free explicit model predictive control.
//!
//! The MPC problem ([`problem`]) is condensed into a parametric QP ([`lifting`]) whose
//! minimizer is located online by an active-set search ([`solver`]). [`oracle`] holds
//! independent reference solvers, [`beam`] the Timoshenko beam benchmark and [`sim`]
//! the closed-loop driver.

pub mod beam;
pub mod cli;
pub mod error;
pub mod integrate;
pub mod io;
pub mod lifting;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod sim;
pub mod solver;
pub mod testing;

pub use error::{Error, Result};
pub use lifting::LiftedQP;
pub use problem::{Parameter, ProblemDefinition};
pub use solver::{ActiveSet, SolveResult, SolveStatus, Tolerances};
