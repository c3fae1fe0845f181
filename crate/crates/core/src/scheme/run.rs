//! Initialization from raw data and the time loop.

use super::regularize::{regularize_phi0, regularize_theta0};
use super::state::State;
use super::step::{step, StepReport};
use super::SchemeConfig;
use crate::diagnostics::{LedgerRow, RunLedger};
use crate::elliptic::harmonic_extension;
use crate::error::{Error, Result};
use crate::grid::{divergence, weighted_laplacian, BoundaryTrace, CellField, FaceField, Grid, ScalarBc};
use crate::physics::PhysParams;

/// Unregularized initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub phi0: CellField,
    pub theta0: CellField,
    pub trace: BoundaryTrace,
    /// Must be discretely divergence free with zero wall-normal components.
    pub u0: FaceField,
}

/// Reference values the invariants are measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantBounds {
    /// Mean of the regularized phase field.
    pub mass: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

pub const MASS_TOL: f64 = 1e-12;
pub const THETA_TOL: f64 = 1e-10;
pub const BARRIER_TOL: f64 = 1e-12;

impl InvariantBounds {
    /// Violated invariants of `state`, by name.
    pub fn check(&self, state: &State, identity: Option<(f64, f64)>) -> Vec<Error> {
        let mut out = vec![];
        let drift = (state.phi.mean() - self.mass).abs();
        if drift > MASS_TOL {
            out.push(Error::Invariant {
                name: "mass",
                detail: format!("mean(phi) drifted by {drift:e} at step {}", state.step),
            });
        }
        let th = state.theta();
        if th.min() < self.theta_lo - THETA_TOL || th.max() > self.theta_hi + THETA_TOL {
            out.push(Error::Invariant {
                name: "temperature bounds",
                detail: format!(
                    "theta in [{:e}, {:e}] leaves [{:e}, {:e}] at step {}",
                    th.min(),
                    th.max(),
                    self.theta_lo,
                    self.theta_hi,
                    state.step
                ),
            });
        }
        let m = state.phi.max_abs();
        if !(m <= 1.0 - BARRIER_TOL) {
            out.push(Error::Invariant {
                name: "phase-field bound",
                detail: format!("max|phi| = {m} at step {}", state.step),
            });
        }
        if let Some((res, tol)) = identity {
            if !(res <= tol) {
                out.push(Error::Invariant {
                    name: "energy identity",
                    detail: format!("residual {res:e} exceeds {tol:e} at step {}", state.step),
                });
            }
        }
        out
    }
}

/// Regularizes the data with `N = round(1/h)` and builds the state at step 0.
pub fn initialize(data: &InitialData, params: &PhysParams, cfg: &SchemeConfig, g: &Grid) -> Result<(State, InvariantBounds)> {
    params.validate()?;
    cfg.validate()?;
    data.u0.check(g)?;
    if data.u0.max_abs_normal_boundary() != 0.0 {
        return Err(Error::InvalidParameter("initial velocity must vanish on the walls".into()));
    }
    let div = divergence(&data.u0, g)?.max_abs();
    let scale = data.u0.max_abs().max(1.0) / g.dx.min(g.dy);
    if div > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!(
            "initial velocity must be divergence free, max|div u| = {div:e}"
        )));
    }
    let n = ((1.0 / cfg.h).round() as usize).max(1);
    let sc = &cfg.solver;
    let theta_b = harmonic_extension(&data.trace, g, &sc.with_rel_tol(sc.rel_tol.min(1e-12)))?;
    let phi = regularize_phi0(&data.phi0, n, g, sc)?;
    let (varpi, vartheta) = regularize_theta0(&data.theta0, &data.trace, &theta_b, n, g, sc)?;
    let mut mu = weighted_laplacian(&FaceField::constant(g, 1.0, 1.0), &phi, g)?;
    for (m, &p) in mu.values.iter_mut().zip(&phi.values) {
        *m = params.potential.w_prime(p)? - *m;
    }
    let mu = mu.with_bc(ScalarBc::NeumannZero);
    let bounds = InvariantBounds {
        mass: phi.mean(),
        theta_lo: varpi.min().min(data.trace.min()),
        theta_hi: varpi.max().max(data.trace.max()),
    };
    let state = State {
        grid: *g,
        u: data.u0.clone(),
        p: CellField::zeros(g, ScalarBc::NeumannZero),
        phi,
        mu,
        vartheta,
        theta_b,
        step: 0,
        time: 0.0,
        h: 0.0,
    };
    state.check()?;
    Ok((state, bounds))
}

/// Everything a run produced, including a failure that stopped it early.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ledger: RunLedger,
    pub state: State,
    pub bounds: InvariantBounds,
    pub reports: Vec<StepReport>,
    /// The step failure or invariant violation that ended the run.
    pub failure: Option<Error>,
}

impl RunOutcome {
    pub fn is_clean(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs from an already initialized state; `observe` sees every accepted state and its row.
pub fn run_from(
    initial: State,
    bounds: InvariantBounds,
    params: &PhysParams,
    cfg: &SchemeConfig,
    mut observe: impl FnMut(&State, &LedgerRow),
) -> Result<RunOutcome> {
    let mut ledger = RunLedger::default();
    let row0 = LedgerRow::of(&initial, params)?;
    observe(&initial, &row0);
    ledger.push(row0)?;
    let mut state = initial;
    let mut reports = Vec::with_capacity(cfg.n_steps);
    let mut failure = None;
    for _ in 0..cfg.n_steps {
        let (next, mut report) = match step(&state, params, cfg) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let identity = cfg.identity_tol.map(|t| (report.energy_identity_residual, t));
        let violations = bounds.check(&next, identity);
        report.violations.extend(violations.iter().map(|e| e.to_string()));
        let mut row = LedgerRow::of(&next, params)?;
        row.identity_residual = report.energy_identity_residual;
        row.outer_iters = report.outer_iters;
        row.newton_iters = report.newton_iters;
        observe(&next, &row);
        ledger.push(row)?;
        reports.push(report);
        state = next;
        if let Some(e) = violations.into_iter().next() {
            failure = Some(e);
            break;
        }
    }
    Ok(RunOutcome {
        ledger,
        state,
        bounds,
        reports,
        failure,
    })
}

/// Regularizes the data and runs `cfg.n_steps` steps.
///
/// Setup errors are returned as `Err`; failures during stepping end the run
/// and are reported in [`RunOutcome::failure`] together with the ledger so far.
pub fn run(data: &InitialData, params: &PhysParams, cfg: &SchemeConfig, g: &Grid) -> Result<RunOutcome> {
    let (s0, bounds) = initialize(data, params, cfg, g)?;
    run_from(s0, bounds, params, cfg, |_, _| {})
}
