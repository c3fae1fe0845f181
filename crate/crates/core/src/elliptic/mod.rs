//! Matrix-free Krylov solvers and the elliptic solution operators built on them.

mod harmonic;
mod krylov;
mod neumann;
mod stokes;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use harmonic::harmonic_extension;
pub use krylov::{bicgstab, bicgstab_solve, cg, cg_solve, minres, Precond};
pub use neumann::{neumann_inverse, weighted_neumann_inverse, weighted_neumann_inverse_faces};
pub use stokes::{stokes_inverse, stokes_solve, StokesOperator, StokesSolution};

/// Stopping rule shared by all iterative solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` means ten times the number of unknowns.
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_iter: None,
        }
    }
}

impl SolverConfig {
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n.max(1)).max(1)
    }

    /// Residual target for a right-hand side of Euclidean norm `rhs_norm`.
    pub fn target(&self, rhs_norm: f64) -> f64 {
        (self.rel_tol * rhs_norm).max(self.abs_tol)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) || self.max_iter == Some(0) {
            return Err(crate::Error::InvalidParameter(format!(
                "solver tolerances must be positive and max_iter at least 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, residual {:.3e}, {}",
            self.iterations,
            self.final_residual,
            if self.converged { "converged" } else { "not converged" }
        )
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn project_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}
