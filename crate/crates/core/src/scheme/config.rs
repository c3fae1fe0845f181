use serde::{Deserialize, Serialize};

use crate::elliptic::SolverConfig;
use crate::error::{Error, Result};

/// Which explicit part accompanies the convex potential in the chemical-potential equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// `mu + c_W (phi + phi_k) = -Delta phi + F'(phi)`.
    #[default]
    Symmetric,
    /// `mu + 2 c_W phi_k = -Delta phi + F'(phi)`.
    ConvexSplit,
}

/// Time step, iteration limits and tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub h: f64,
    pub n_steps: usize,
    /// Relative increment of the coupling iteration.
    pub outer_tol: f64,
    pub outer_max: usize,
    /// Max-norm of the scaled Cahn–Hilliard residual.
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Fraction of the distance to `+-1` a Newton update may cover.
    pub damping_fraction: f64,
    pub splitting: Splitting,
    /// Halvings of `h` tried after a failed step.
    pub max_halvings: usize,
    /// Per-step bound on the normalized energy-identity residual; `None` disables the check.
    pub identity_tol: Option<f64>,
    pub solver: SolverConfig,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            h: 0.01,
            n_steps: 100,
            outer_tol: 1e-9,
            outer_max: 50,
            newton_tol: 1e-11,
            newton_max: 40,
            damping_fraction: 0.9,
            splitting: Splitting::Symmetric,
            max_halvings: 3,
            identity_tol: Some(1e-7),
            solver: SolverConfig::default(),
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("time step must be positive, got {}", self.h));
        }
        if !(self.outer_tol > 0.0 && self.newton_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.outer_max == 0 || self.newton_max == 0 {
            return bad("iteration limits must be at least 1".into());
        }
        if !(self.damping_fraction > 0.0 && self.damping_fraction < 1.0) {
            return bad(format!(
                "damping fraction must lie in (0, 1), got {}",
                self.damping_fraction
            ));
        }
        if let Some(t) = self.identity_tol {
            if !(t > 0.0) {
                return bad(format!("identity tolerance must be positive, got {t}"));
            }
        }
        self.solver.validate()
    }

    /// Same configuration with tolerances scaled by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            outer_tol: self.outer_tol * factor,
            newton_tol: self.newton_tol * factor,
            solver: SolverConfig {
                rel_tol: self.solver.rel_tol * factor,
                abs_tol: self.solver.abs_tol * factor,
                ..self.solver
            },
            ..*self
        }
    }
}
