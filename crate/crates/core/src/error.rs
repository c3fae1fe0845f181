use thiserror::Error;

use crate::elliptic::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coefficient bound violated: {0}")]
    CoefficientBound(String),

    #[error("operation requires a boundary-condition tag: {0}")]
    MissingBoundaryCondition(&'static str),

    #[error("argument {value} outside the potential's domain (-1, 1)")]
    PotentialDomain { value: f64 },

    #[error("compatibility condition violated: {0}")]
    Compatibility(String),

    #[error("{solver} did not converge ({report})")]
    NotConverged {
        solver: &'static str,
        report: SolveReport,
    },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Newton { iterations: usize, residual: f64 },

    #[error("outer coupling iteration did not converge after {iterations} sweeps (increment {increment:e})")]
    Coupling { iterations: usize, increment: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: &'static str, detail: String },
}

impl Error {
    /// True for failures of an iterative solve (Krylov, Newton or the coupling loop).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::Newton { .. } | Error::Coupling { .. }
        )
    }
}
