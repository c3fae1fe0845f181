//! The partially implicit time step and its subproblems.
//!
//! Coefficients (density, viscosity, mobility, conductivity and the
//! temperature in the Marangoni term) are frozen at the previous level. The
//! phase-field pair, the velocity and the temperature deviation are coupled
//! through a block Gauss–Seidel loop: phase field with the current velocity
//! iterate, then momentum with convection linearized about that iterate,
//! then heat with the new velocity.

mod ch;
mod config;
mod heat;
mod momentum;
mod regularize;
mod run;
mod state;
mod step;

pub use ch::{ChProblem, ChSolution, NewtonConfig};
pub use config::{SchemeConfig, Splitting};
pub use heat::{cell_peclet, heat_solve};
pub use momentum::MomentumSystem;
pub use regularize::{regularize_phi0, regularize_theta0, PHI_MARGIN};
pub use run::{
    initialize, run, run_from, InitialData, InvariantBounds, RunOutcome, BARRIER_TOL, MASS_TOL, THETA_TOL,
};
pub use state::{FrozenCoefficients, State};
pub use step::{ch_subproblem, heat_subproblem, momentum_subproblem, step, step_once, StepReport};
