//! The `run`, `convergence` and `twin` commands.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thermocap_core::diagnostics::{uniqueness_distance, RunLedger};
use thermocap_core::grid::{inner, CellField, Grid, ScalarBc};
use thermocap_core::physics::PhysParams;
use thermocap_core::presets::VelocityPreset;
use thermocap_core::scheme::{initialize, run, run_from, InitialData, RunOutcome, SchemeConfig, State};
use thermocap_core::Error;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{thin_ledger, write_ledger, write_snapshot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// A request the command cannot honour (exit code 1).
    #[error("invalid request: {0}")]
    Invalid(String),
    /// A run that had to succeed for the report did not (exit code 3).
    #[error("{0}")]
    Failed(String),
}

/// Exit code for an error that ended a run while stepping.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Invariant { .. } => EXIT_INVARIANT,
        _ => EXIT_SOLVER,
    }
}

/// Exit code for a core error returned by a command (setup errors are usage errors).
pub fn exit_code_for_setup(e: &Error) -> i32 {
    match e {
        Error::Invariant { .. } => EXIT_INVARIANT,
        e if e.is_solver_failure() => EXIT_SOLVER,
        _ => EXIT_USAGE,
    }
}

/// What `run` produced.
#[derive(Debug)]
pub struct RunSummary {
    pub outcome: RunOutcome,
    pub ledger_path: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        self.outcome.failure.as_ref().map_or(EXIT_OK, exit_code_for)
    }
}

/// Runs a configuration, writing `ledger.csv` (also after a failure) and the snapshots.
pub fn cmd_run(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunSummary, CommandError> {
    let g = cfg.grid()?;
    let params = cfg.params()?;
    let data = cfg.initial_data(&g)?;
    let dir = out_dir.map_or_else(|| cfg.output.dir.clone(), Path::to_path_buf);
    std::fs::create_dir_all(&dir)?;
    let (s0, bounds) = initialize(&data, &params, &cfg.scheme, &g)?;
    let out = &cfg.output;
    let mut snapshots = vec![];
    let mut io_error = None;
    let outcome = run_from(s0, bounds, &params, &cfg.scheme, |s, _| {
        let due = out.snapshot_every > 0 && s.step % out.snapshot_every == 0;
        if due && io_error.is_none() && (out.csv || out.vtk) {
            match write_snapshot(&dir, s, out.csv, out.vtk) {
                Ok(p) => snapshots.extend(p),
                Err(e) => io_error = Some(e),
            }
        }
    })?;
    let ledger_path = dir.join("ledger.csv");
    write_ledger(&ledger_path, &thin_ledger(&outcome.ledger, out.ledger_every))?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    Ok(RunSummary {
        outcome,
        ledger_path,
        snapshots,
    })
}

/// Root of the grid inner product of the differences in `phi`, `u` and `vartheta`.
pub fn state_difference(a: &State, b: &State) -> Result<f64, Error> {
    let g = &a.grid;
    let dphi = a.phi.zip_map(&b.phi, |x, y| x - y);
    let dth = a.vartheta.zip_map(&b.vartheta, |x, y| x - y);
    let mut du = a.u.clone();
    du.axpy(-1.0, &b.u);
    Ok((inner(&dphi, &dphi, g)? + inner(&du, &du, g)? + inner(&dth, &dth, g)?).sqrt())
}

/// Temporal self-convergence against the finest run.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub final_time: f64,
    /// Step sizes `h, h/2, h/4`; the reference uses `h/8`.
    pub step_sizes: Vec<f64>,
    pub differences: Vec<f64>,
    /// `log2` of successive difference ratios.
    pub orders: Vec<f64>,
    /// Smallest of `orders`.
    pub observed_order: f64,
}

fn refined(cfg: &SchemeConfig, level: u32) -> SchemeConfig {
    let k = 1usize << level;
    SchemeConfig {
        h: cfg.h / k as f64,
        n_steps: cfg.n_steps * k,
        ..*cfg
    }
}

fn clean(outcome: RunOutcome, what: &str) -> Result<RunOutcome, CommandError> {
    match outcome.failure {
        None => Ok(outcome),
        Some(e) => Err(CommandError::Failed(format!("{what} failed: {e}"))),
    }
}

/// Runs `h, h/2, h/4, h/8` from one regularized initial state.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<ConvergenceReport, CommandError> {
    let g = cfg.grid()?;
    let params = cfg.params()?;
    let data = cfg.initial_data(&g)?;
    let (s0, bounds) = initialize(&data, &params, &cfg.scheme, &g)?;
    let mut finals = vec![];
    for level in 0..4 {
        let c = refined(&cfg.scheme, level);
        let out = run_from(s0.clone(), bounds, &params, &c, |_, _| {})?;
        finals.push(clean(out, &format!("run with h = {}", c.h))?.state);
    }
    let reference = &finals[3];
    let differences = finals[..3]
        .iter()
        .map(|s| state_difference(s, reference))
        .collect::<Result<Vec<_>, _>>()?;
    let orders: Vec<f64> = differences.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(ConvergenceReport {
        final_time: cfg.scheme.h * cfg.scheme.n_steps as f64,
        step_sizes: (0..3).map(|l| refined(&cfg.scheme, l).h).collect(),
        differences,
        observed_order: orders.iter().copied().fold(f64::INFINITY, f64::min),
        orders,
    })
}

/// Distance time series of two perturbed runs against a base run.
#[derive(Debug, Clone, Serialize)]
pub struct TwinReport {
    pub eps: f64,
    pub times: Vec<f64>,
    /// Distance for perturbation `eps`.
    pub distance: Vec<f64>,
    /// Distance for perturbation `eps / 2`.
    pub distance_half: Vec<f64>,
    /// `distance / distance_half` at the final time (NaN when both vanish).
    pub final_ratio: f64,
}

/// Rejects parameters for which the distance is not a valid stability metric.
pub fn check_twin_restrictions(p: &PhysParams) -> Result<(), CommandError> {
    if p.rho1 != p.rho2 {
        return Err(CommandError::Invalid(format!(
            "twin mode requires matched densities, got rho1 = {} and rho2 = {}",
            p.rho1, p.rho2
        )));
    }
    if p.mobility.depends_on_theta() {
        return Err(CommandError::Invalid(
            "twin mode requires a temperature-independent mobility".into(),
        ));
    }
    if p.conductivity.depends_on_phi() {
        return Err(CommandError::Invalid(
            "twin mode requires a conductivity independent of the phase field".into(),
        ));
    }
    Ok(())
}

/// Adds `eps` times fixed smooth patterns to all initial fields; the phase-field pattern has zero mean.
pub fn perturb(data: &InitialData, eps: f64, g: &Grid) -> Result<InitialData, CommandError> {
    use std::f64::consts::PI;
    let mut pattern = CellField::from_fn(g, ScalarBc::None, |x, y| {
        (PI * x / g.lx).cos() * (2.0 * PI * y / g.ly).cos() + 0.5 * (2.0 * PI * x / g.lx).cos()
    });
    pattern.remove_mean();
    let phi0 = data.phi0.zip_map(&pattern, |a, b| a + eps * b);
    if phi0.max_abs() >= 1.0 {
        return Err(CommandError::Invalid(format!(
            "perturbation {eps} pushes the phase field out of (-1, 1)"
        )));
    }
    let bump = CellField::from_fn(g, ScalarBc::None, |x, y| (PI * x / g.lx).sin() * (PI * y / g.ly).sin());
    let mut u0 = data.u0.clone();
    u0.axpy(eps, &VelocityPreset::Vortex { amplitude: 1.0 }.build(g));
    Ok(InitialData {
        phi0,
        theta0: data.theta0.zip_map(&bump, |a, b| a + eps * b),
        trace: data.trace.clone(),
        u0,
    })
}

/// Runs the base configuration and two perturbations of size `eps` and `eps / 2`.
pub fn cmd_twin(cfg: &RunConfig, eps: f64) -> Result<TwinReport, CommandError> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(CommandError::Invalid(format!("perturbation must be nonnegative, got {eps}")));
    }
    let g = cfg.grid()?;
    let params = cfg.params()?;
    check_twin_restrictions(&params)?;
    let data = cfg.initial_data(&g)?;
    let mut base = vec![];
    let (s0, bounds) = initialize(&data, &params, &cfg.scheme, &g)?;
    let out = run_from(s0, bounds, &params, &cfg.scheme, |s, _| base.push(s.clone()))?;
    clean(out, "base run")?;
    let times: Vec<f64> = base.iter().map(|s| s.time).collect();

    let track = |e: f64| -> Result<Vec<f64>, CommandError> {
        let pert = perturb(&data, e, &g)?;
        let mut dist = vec![];
        let mut err = None;
        let (s0, bounds) = initialize(&pert, &params, &cfg.scheme, &g)?;
        let out = run_from(s0, bounds, &params, &cfg.scheme, |s, _| {
            match uniqueness_distance(&base[s.step], s, &params, &cfg.scheme.solver) {
                Ok(d) => dist.push(d),
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
        })?;
        clean(out, "perturbed run")?;
        match err {
            Some(e) => Err(e.into()),
            None => Ok(dist),
        }
    };
    let distance = track(eps)?;
    let distance_half = track(0.5 * eps)?;
    let (a, b) = (*distance.last().unwrap_or(&0.0), *distance_half.last().unwrap_or(&0.0));
    Ok(TwinReport {
        eps,
        times,
        distance,
        distance_half,
        final_ratio: a / b,
    })
}

/// Ledger of a run without writing files.
pub fn ledger_of(cfg: &RunConfig) -> Result<(RunLedger, Option<Error>), CommandError> {
    let g = cfg.grid()?;
    let params = cfg.params()?;
    let out = run(&cfg.initial_data(&g)?, &params, &cfg.scheme, &g)?;
    Ok((out.ledger, out.failure))
}
