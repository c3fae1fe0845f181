//! One time step: block Gauss–Seidel coupling of the three subproblems.

use serde::{Deserialize, Serialize};

use super::ch::{ChProblem, ChSolution, NewtonConfig};
use super::heat::{cell_peclet, heat_solve};
use super::momentum::MomentumSystem;
use super::state::{FrozenCoefficients, State};
use super::SchemeConfig;
use crate::diagnostics::energy_identity_residual;
use crate::elliptic::{SolveReport, SolverConfig, StokesSolution};
use crate::error::{Error, Result};
use crate::grid::{CellField, FaceField};
use crate::physics::PhysParams;

/// What happened during a step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// Coupling sweeps, summed over substeps.
    pub outer_iters: usize,
    pub newton_iters: usize,
    /// MINRES iterations of the Newton corrections.
    pub ch_linear_iters: usize,
    /// Report of the last pressure iteration.
    pub momentum: SolveReport,
    /// Inner velocity iterations, summed.
    pub momentum_inner_iters: usize,
    pub heat: SolveReport,
    /// Final relative increment of the coupling loop.
    pub increment: f64,
    /// Largest normalized energy-identity residual over substeps.
    pub energy_identity_residual: f64,
    /// Largest cell Peclet number seen by the heat solve.
    pub peclet: f64,
    /// Number of substeps taken (1 unless `h` was halved).
    pub substeps: usize,
    /// Names and details of violated invariants.
    pub violations: Vec<String>,
}

impl StepReport {
    fn merge(mut self, other: StepReport) -> StepReport {
        self.outer_iters += other.outer_iters;
        self.newton_iters += other.newton_iters;
        self.ch_linear_iters += other.ch_linear_iters;
        self.momentum = other.momentum;
        self.momentum_inner_iters += other.momentum_inner_iters;
        self.heat = other.heat;
        self.increment = other.increment;
        self.energy_identity_residual = self.energy_identity_residual.max(other.energy_identity_residual);
        self.peclet = self.peclet.max(other.peclet);
        self.substeps += other.substeps;
        self.violations.extend(other.violations);
        self
    }
}

fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

struct Iterate {
    phi: CellField,
    mu: CellField,
    u: FaceField,
    vartheta: CellField,
}

impl Iterate {
    fn increment(&self, old: &Iterate) -> f64 {
        let num = sq_diff(&self.phi.values, &old.phi.values)
            + sq_diff(&self.mu.values, &old.mu.values)
            + sq_diff(&self.u.xcomp, &old.u.xcomp)
            + sq_diff(&self.u.ycomp, &old.u.ycomp)
            + sq_diff(&self.vartheta.values, &old.vartheta.values);
        if num == 0.0 {
            return 0.0;
        }
        let den = sq(&self.phi.values) + sq(&self.mu.values) + sq(&self.u.xcomp) + sq(&self.u.ycomp)
            + sq(&self.vartheta.values);
        (num / den).sqrt()
    }
}

fn newton_config(cfg: &SchemeConfig) -> NewtonConfig {
    NewtonConfig {
        tol: cfg.newton_tol,
        max_iter: cfg.newton_max,
        damping_fraction: cfg.damping_fraction,
        splitting: cfg.splitting,
        linear: SolverConfig {
            rel_tol: cfg.solver.rel_tol.min(1e-8),
            abs_tol: cfg.newton_tol * 1e-2,
            max_iter: cfg.solver.max_iter,
        },
    }
}

/// Phase-field pair for a step of size `h` with velocity `u`, starting Newton from `(phi0, mu0)`.
pub fn ch_subproblem(
    state_k: &State,
    frozen: &FrozenCoefficients,
    u: &FaceField,
    guess: (&CellField, &CellField),
    params: &PhysParams,
    cfg: &SchemeConfig,
    h: f64,
) -> Result<ChSolution> {
    let ch = ChProblem::new(&state_k.grid, h, &state_k.phi, u, &frozen.mobility, &params.potential)?;
    ch.solve(guess.0, guess.1, &newton_config(cfg))
}

/// Velocity and pressure for given phase-field iterates, convection linearized about `u_lin`.
#[allow(clippy::too_many_arguments)]
pub fn momentum_subproblem(
    state_k: &State,
    frozen: &FrozenCoefficients,
    phi: &CellField,
    mu: &CellField,
    u_lin: &FaceField,
    params: &PhysParams,
    cfg: &SchemeConfig,
    h: f64,
) -> Result<StokesSolution> {
    MomentumSystem::assemble(state_k, frozen, phi, mu, u_lin, params, h)?.solve(state_k, frozen, &cfg.solver)
}

/// Temperature deviation after a step of size `h` with velocity `u`.
pub fn heat_subproblem(
    state_k: &State,
    frozen: &FrozenCoefficients,
    u: &FaceField,
    cfg: &SchemeConfig,
    h: f64,
) -> Result<(CellField, SolveReport)> {
    heat_solve(
        &state_k.vartheta,
        &state_k.theta_b,
        u,
        &frozen.conductivity,
        h,
        &state_k.grid,
        &cfg.solver,
    )
}

/// One step of size `h` without retries.
pub fn step_once(state_k: &State, params: &PhysParams, cfg: &SchemeConfig, h: f64) -> Result<(State, StepReport)> {
    let g = &state_k.grid;
    let frozen = FrozenCoefficients::at(state_k, params)?;
    let mut report = StepReport {
        substeps: 1,
        ..StepReport::default()
    };
    let mut it = Iterate {
        phi: state_k.phi.clone(),
        mu: state_k.mu.clone(),
        u: state_k.u.clone(),
        vartheta: state_k.vartheta.clone(),
    };
    let mut p = state_k.p.clone();
    let mut increment = f64::INFINITY;
    while report.outer_iters < cfg.outer_max {
        report.outer_iters += 1;
        let ChSolution {
            phi,
            mu,
            newton_iters,
            linear_iters,
            ..
        } = ch_subproblem(state_k, &frozen, &it.u, (&it.phi, &it.mu), params, cfg, h)?;
        report.newton_iters += newton_iters;
        report.ch_linear_iters += linear_iters;

        let sol = momentum_subproblem(state_k, &frozen, &phi, &mu, &it.u, params, cfg, h)?;
        report.momentum = sol.report;
        report.momentum_inner_iters += sol.inner_iterations;

        report.peclet = report.peclet.max(cell_peclet(&sol.u, &frozen.conductivity, g));
        let (vartheta, heat) = heat_subproblem(state_k, &frozen, &sol.u, cfg, h)?;
        report.heat = heat;

        let next = Iterate {
            phi,
            mu,
            u: sol.u,
            vartheta,
        };
        increment = next.increment(&it);
        it = next;
        p = sol.p;
        if increment <= cfg.outer_tol {
            break;
        }
    }
    report.increment = increment;
    if increment > cfg.outer_tol {
        return Err(Error::Coupling {
            iterations: report.outer_iters,
            increment,
        });
    }
    let state = State {
        grid: *g,
        u: it.u,
        p,
        phi: it.phi,
        mu: it.mu,
        vartheta: it.vartheta,
        theta_b: state_k.theta_b.clone(),
        step: state_k.step + 1,
        time: state_k.time + h,
        h,
    };
    report.energy_identity_residual = energy_identity_residual(state_k, &state, params, cfg.splitting)?;
    let drift = (state.phi.mean() - state_k.phi.mean()).abs();
    if drift > 1e-12 {
        report.violations.push(format!("mass: drift {drift:e} within one step"));
    }
    if state.phi.max_abs() > 1.0 - 1e-12 {
        report
            .violations
            .push(format!("barrier: max|phi| = {}", state.phi.max_abs()));
    }
    Ok((state, report))
}

fn retryable(e: &Error) -> bool {
    e.is_solver_failure() || matches!(e, Error::PotentialDomain { .. })
}

fn advance(state_k: &State, params: &PhysParams, cfg: &SchemeConfig, h: f64, depth: usize) -> Result<(State, StepReport)> {
    match step_once(state_k, params, cfg, h) {
        Err(e) if retryable(&e) && depth < cfg.max_halvings => {
            let (mid, r1) = advance(state_k, params, cfg, 0.5 * h, depth + 1)?;
            let (end, r2) = advance(&mid, params, cfg, 0.5 * h, depth + 1)?;
            Ok((end, r1.merge(r2)))
        }
        other => other,
    }
}

/// Advances by `cfg.h`, halving the step on solver failure up to `cfg.max_halvings` times.
///
/// The returned state has step index `k + 1` and time `t_k + h` regardless of substeps;
/// its `h` is the size of the last substep.
pub fn step(state_k: &State, params: &PhysParams, cfg: &SchemeConfig) -> Result<(State, StepReport)> {
    state_k.check()?;
    let (mut s, r) = advance(state_k, params, cfg, cfg.h, 0)?;
    s.step = state_k.step + 1;
    s.time = state_k.time + cfg.h;
    Ok((s, r))
}
