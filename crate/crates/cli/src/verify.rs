//! The acceptance suite behind `verify`.
//!
//! Each criterion returns a [`CriterionOutcome`]; errors raised while a
//! criterion runs count as a failure and end up in its `detail`.
//! Independent criteria run on up to `THERMOCAP_THREADS` threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thermocap_core::diagnostics::RunLedger;
use thermocap_core::elliptic::{
    harmonic_extension, neumann_inverse, weighted_neumann_inverse, SolverConfig, StokesOperator,
};
use thermocap_core::grid::{
    divergence, gradient, weighted_laplacian, BoundaryTrace, CellField, FaceField, Grid, ScalarBc,
};
use thermocap_core::physics::{CoefficientModel, PhysParams};
use thermocap_core::presets::{Axis, PhiPreset, ThetaPreset, TracePreset, VelocityPreset};
use thermocap_core::scheme::{initialize, FrozenCoefficients, SchemeConfig, State};
use thermocap_core::Error;

use crate::commands::{cmd_convergence, cmd_twin, ledger_of, CommandError};
use crate::config::{GridConfig, InitialConfig, OutputConfig, PhysicsConfig, PotentialConfig, RunConfig};
use crate::oracles;
use crate::references;

/// Result of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    /// The one-line human-readable summary.
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

/// Machine-readable summary printed by `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub passed: bool,
    pub criteria: Vec<CriterionOutcome>,
}

pub const CRITERIA: [(usize, &str); 10] = [
    (1, "mass conservation"),
    (2, "temperature maximum principle"),
    (3, "phase-field bounds"),
    (4, "discrete energy identity"),
    (5, "isothermal dissipativity"),
    (6, "structural degenerations"),
    (7, "elliptic oracles"),
    (8, "temporal self-convergence"),
    (9, "twin-run continuous dependence"),
    (10, "determinism"),
];

type Check = Result<(bool, String), CommandError>;

/// Runs criterion `id` (1 to 10).
pub fn run_criterion(id: usize) -> CriterionOutcome {
    let name = CRITERIA
        .iter()
        .find(|(k, _)| *k == id)
        .map_or("unknown criterion", |(_, n)| *n);
    let start = Instant::now();
    let result = match id {
        1 => mass_conservation(),
        2 => temperature_bounds(),
        3 => phase_field_bounds(),
        4 => energy_identity(),
        5 => isothermal_dissipativity(),
        6 => structural_degenerations(),
        7 => elliptic_oracles(),
        8 => self_convergence(),
        9 => twin_dependence(),
        10 => determinism(),
        _ => Err(CommandError::Invalid(format!("no criterion {id}"))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Concurrency cap from `THERMOCAP_THREADS` (default: available parallelism).
pub fn threads_from_env() -> usize {
    std::env::var("THERMOCAP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the criteria `ids` on at most `threads` threads; outcomes keep the order of `ids`.
pub fn verify_all(ids: &[usize], threads: usize) -> VerifySummary {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CriterionOutcome>>> = Mutex::new(vec![None; ids.len()]);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, ids.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&id) = ids.get(k) else { break };
                let out = run_criterion(id);
                slots.lock().expect("no thread panicked while holding the lock")[k] = Some(out);
            });
        }
    });
    let criteria: Vec<CriterionOutcome> = slots
        .into_inner()
        .expect("all threads joined")
        .into_iter()
        .map(|o| o.expect("every criterion ran"))
        .collect();
    VerifySummary {
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

/// Run-level checks on a user configuration: a clean run whose repeat gives the same ledger.
pub fn verify_config(cfg: &RunConfig) -> VerifySummary {
    let start = Instant::now();
    let result = (|| -> Check {
        let (a, fa) = ledger_of(cfg)?;
        if let Some(e) = fa {
            return Ok((false, format!("run failed after {} rows: {e}", a.len())));
        }
        let (b, _) = ledger_of(cfg)?;
        let same = a.to_csv_string() == b.to_csv_string();
        Ok((
            same,
            format!(
                "{} steps with all invariants holding; repeated ledger {}",
                a.len() - 1,
                if same { "identical" } else { "differs" }
            ),
        ))
    })();
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    let c = CriterionOutcome {
        id: 0,
        name: "configuration run",
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    };
    VerifySummary {
        passed,
        criteria: vec![c],
    }
}

// --- randomized suite shared by criteria 1 and 2 ---------------------------

pub const RANDOM_CONFIGS: u64 = 10;
pub const RANDOM_STEPS: usize = 500;

/// A randomized configuration with `theta0` and the wall data in `[0, 1]`.
///
/// All draws come from `ChaCha8Rng::seed_from_u64(seed)` in a fixed order.
pub fn random_config(seed: u64) -> RunConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = 6.0;
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..=hi);
    let physics = PhysicsConfig {
        rho1: u(0.5, 2.0),
        rho2: u(0.5, 2.0),
        lambda0: u(0.02, 0.1),
        a: 1.0,
        b: u(0.0, 0.5),
        alpha: u(0.0, 1.0),
        gravity: u(0.0, 1.0),
        potential: PotentialConfig {
            a: 1.0,
            a_c: u(1.5, 2.5),
            c_w: None,
        },
        viscosity: CoefficientModel::constant(u(0.1, 0.5)),
        mobility: CoefficientModel::QuadraticPhi {
            base: u(0.1, 0.3),
            curvature: u(0.0, 0.2),
        },
        conductivity: CoefficientModel::BoundedRational {
            lo: u(0.3, 0.5),
            hi: u(0.5, 1.0),
            beta_phi: u(0.0, 1.0),
            beta_theta: u(0.0, 1.0),
        },
        ..PhysicsConfig::default()
    };
    let phi = if u(0.0, 1.0) < 0.5 {
        PhiPreset::Spinodal {
            seed: seed.wrapping_mul(7919),
            amplitude: u(0.05, 0.3),
            mean: u(-0.3, 0.3),
        }
    } else {
        PhiPreset::Bubble {
            center: [u(2.0, 4.0), u(2.0, 4.0)],
            radius: u(1.0, 2.0),
            width: u(0.5, 1.0),
        }
    };
    let axis = if u(0.0, 1.0) < 0.5 { Axis::X } else { Axis::Y };
    let theta = if u(0.0, 1.0) < 0.5 {
        let (lo, hi) = (u(0.0, 0.5), u(0.5, 1.0));
        ThetaPreset::Gradient { low: lo, high: hi, axis }
    } else {
        ThetaPreset::HotSpot {
            background: u(0.0, 0.3),
            peak: u(0.7, 1.0),
            center: [u(1.0, 5.0), u(1.0, 5.0)],
            radius: u(0.5, 2.0),
        }
    };
    let boundary = if u(0.0, 1.0) < 0.5 {
        TracePreset::Linear {
            low: u(0.0, 0.5),
            high: u(0.5, 1.0),
            axis,
        }
    } else {
        let amplitude = u(0.0, 0.5);
        TracePreset::Sinusoidal {
            mean: 0.5,
            amplitude,
            wavenumber: u(0.5, 2.0),
            axis,
        }
    };
    let velocity = VelocityPreset::Random {
        seed: seed.wrapping_add(1000),
        amplitude: u(0.1, 0.5),
        modes: 3,
    };
    let scheme = SchemeConfig {
        h: 0.05,
        n_steps: RANDOM_STEPS,
        outer_tol: 1e-6,
        newton_tol: 1e-8,
        identity_tol: None,
        solver: SolverConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-11,
            max_iter: None,
        },
        ..SchemeConfig::default()
    };
    RunConfig {
        grid: GridConfig {
            nx: 12,
            ny: 12,
            lx: l,
            ly: l,
        },
        physics,
        scheme,
        initial: InitialConfig { phi, theta, velocity },
        boundary,
        output: OutputConfig::default(),
    }
}

struct SuiteRun {
    seed: u64,
    ledger: RunLedger,
    failure: Option<String>,
}

fn random_suite() -> &'static Result<Vec<SuiteRun>, String> {
    static SUITE: OnceLock<Result<Vec<SuiteRun>, String>> = OnceLock::new();
    SUITE.get_or_init(|| {
        (0..RANDOM_CONFIGS)
            .map(|seed| {
                let (ledger, failure) = ledger_of(&random_config(seed)).map_err(|e| format!("config {seed}: {e}"))?;
                Ok(SuiteRun {
                    seed,
                    ledger,
                    failure: failure.map(|e| e.to_string()),
                })
            })
            .collect()
    })
}

/// Common preamble of criteria 1 and 2: every suite run must be complete.
fn complete_suite() -> Result<Result<&'static [SuiteRun], String>, CommandError> {
    let suite = random_suite().as_ref().map_err(|e| CommandError::Failed(e.clone()))?;
    for r in suite {
        if let Some(e) = &r.failure {
            return Ok(Err(format!("config {} stopped after {} rows: {e}", r.seed, r.ledger.len())));
        }
        if r.ledger.len() != RANDOM_STEPS + 1 {
            return Ok(Err(format!("config {} produced {} rows", r.seed, r.ledger.len())));
        }
    }
    Ok(Ok(suite))
}

fn mass_conservation() -> Check {
    let suite = match complete_suite()? {
        Ok(s) => s,
        Err(msg) => return Ok((false, msg)),
    };
    let mut worst: f64 = 0.0;
    for r in suite {
        let m0 = r.ledger.rows[0].mass;
        for row in &r.ledger.rows {
            worst = worst.max((row.mass - m0).abs());
        }
    }
    Ok((
        worst <= 1e-12,
        format!("max |mean phi^k - mean phi^0| = {worst:.3e} over {RANDOM_CONFIGS} configs x {RANDOM_STEPS} steps (tol 1e-12)"),
    ))
}

fn temperature_bounds() -> Check {
    let suite = match complete_suite()? {
        Ok(s) => s,
        Err(msg) => return Ok((false, msg)),
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in suite {
        for row in &r.ledger.rows {
            lo = lo.min(row.theta_min);
            hi = hi.max(row.theta_max);
        }
    }
    Ok((
        lo >= -1e-10 && hi <= 1.0 + 1e-10,
        format!("theta in [{lo:.6e}, {hi:.12}] over {RANDOM_CONFIGS} configs x {RANDOM_STEPS} steps (bounds [-1e-10, 1 + 1e-10])"),
    ))
}

// --- single-configuration criteria ------------------------------------------

fn phase_field_bounds() -> Check {
    let cfg = references::spinodal();
    let g = cfg.grid()?;
    let params = cfg.params()?;
    let data = cfg.initial_data(&g)?;
    let (s0, bounds) = initialize(&data, &params, &cfg.scheme, &g)?;
    let out = thermocap_core::scheme::run_from(s0, bounds, &params, &cfg.scheme, |_, _| {})?;
    if let Some(e) = &out.failure {
        return Ok((false, format!("run stopped after {} steps: {e}", out.reports.len())));
    }
    let retries = out.reports.iter().filter(|r| r.substeps > 1).count();
    let max_phi = out.ledger.rows.iter().map(|r| r.phi_max_abs).fold(0.0, f64::max);
    let spread = out.state.phi.max() - out.state.phi.min();
    Ok((
        retries == 0 && max_phi <= 1.0 - 1e-12 && out.reports.len() == cfg.scheme.n_steps,
        format!(
            "{} steps on {}x{}: max|phi| = {max_phi:.15}, final phi range {spread:.3}, {retries} Newton failures",
            out.reports.len(),
            g.nx,
            g.ny
        ),
    ))
}

fn max_residual(cfg: &RunConfig) -> Result<Result<f64, String>, CommandError> {
    let g = cfg.grid()?;
    let params = cfg.params()?;
    let out = thermocap_core::scheme::run(&cfg.initial_data(&g)?, &params, &cfg.scheme, &g)?;
    if let Some(e) = out.failure {
        return Ok(Err(format!("run stopped after {} steps: {e}", out.reports.len())));
    }
    Ok(Ok(out
        .reports
        .iter()
        .map(|r| r.energy_identity_residual)
        .fold(0.0, f64::max)))
}

fn energy_identity() -> Check {
    let mut cfg = references::marangoni();
    cfg.scheme.identity_tol = None;
    let loose = match max_residual(&cfg)? {
        Ok(r) => r,
        Err(msg) => return Ok((false, msg)),
    };
    let mut tight = cfg.clone();
    tight.scheme = cfg.scheme.tightened(0.1);
    let strict = match max_residual(&tight)? {
        Ok(r) => r,
        Err(msg) => return Ok((false, format!("tightened: {msg}"))),
    };
    let ratio = loose / strict;
    Ok((
        loose <= 1e-7 && ratio >= 5.0,
        format!("max residual {loose:.3e} (tol 1e-7); {strict:.3e} with 10x tighter tolerances, reduction {ratio:.1}x (need 5x)"),
    ))
}

fn isothermal_dissipativity() -> Check {
    let cfg = references::decoupled();
    let (ledger, failure) = ledger_of(&cfg)?;
    if let Some(e) = failure {
        return Ok((false, format!("run stopped after {} rows: {e}", ledger.len())));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for w in ledger.rows.windows(2) {
        let (e0, e1) = (w[0].energy.total, w[1].energy.total);
        let excess = (e1 - e0) / e0.abs().max(1.0);
        worst = worst.max(excess);
        if excess > 1e-11 {
            violations += 1;
        }
    }
    let (first, last) = (ledger.rows[0].energy.total, ledger.rows[ledger.len() - 1].energy.total);
    Ok((
        violations == 0 && ledger.len() == cfg.scheme.n_steps + 1,
        format!(
            "{} steps, E_tot {first:.6e} -> {last:.6e}, largest relative increase {worst:.3e} (slack 1e-11), {violations} violations",
            ledger.len() - 1
        ),
    ))
}

fn random_cells(g: &Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64, bc: ScalarBc) -> CellField {
    let v = (0..g.n_cells()).map(|_| rng.gen_range(lo..hi)).collect();
    CellField::from_values(g, v, bc).expect("sizes match")
}

fn random_trace(g: &Grid, rng: &mut ChaCha8Rng) -> BoundaryTrace {
    let mut t = BoundaryTrace::zeros(g);
    for side in [&mut t.south, &mut t.north, &mut t.west, &mut t.east] {
        for v in side.iter_mut() {
            *v = rng.gen_range(0.0..1.0);
        }
    }
    t
}

fn all_bits_zero(f: &FaceField) -> bool {
    f.xcomp.iter().chain(&f.ycomp).all(|v| v.to_bits() == 0)
}

fn structural_degenerations() -> Check {
    let g = Grid::new(8, 8, 4.0, 4.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let trace = random_trace(&g, &mut rng);
    let cfg = SolverConfig::default();
    let theta_b = harmonic_extension(&trace, &g, &cfg)?;
    let state = State {
        grid: g,
        u: FaceField::zeros(&g),
        p: CellField::zeros(&g, ScalarBc::NeumannZero),
        phi: random_cells(&g, &mut rng, -0.9, 0.9, ScalarBc::NeumannZero),
        mu: random_cells(&g, &mut rng, -2.0, 2.0, ScalarBc::NeumannZero),
        vartheta: random_cells(&g, &mut rng, -0.5, 0.5, ScalarBc::Dirichlet(BoundaryTrace::zeros(&g))),
        theta_b,
        step: 0,
        time: 0.0,
        h: 0.0,
    };
    let matched = PhysParams {
        rho1: 1.7,
        rho2: 1.7,
        b: 0.0,
        mobility: CoefficientModel::QuadraticPhi {
            base: 0.2,
            curvature: 0.5,
        },
        ..PhysParams::default()
    };
    let frozen = FrozenCoefficients::at(&state, &matched)?;
    let grad_mu = gradient(&state.mu, &g)?;
    let j_direct = matched.flux_j(&frozen.mobility, &grad_mu)?;
    let j_frozen = frozen.flux_j(&state.mu, &matched, &g)?;
    let theta = state.theta();
    let force = matched.marangoni_force(&state.phi, &theta, &g)?;
    let pairing = matched.marangoni_pairing(&state.phi, &theta, &g)?;
    let pairing_zero = [&pairing.sxx, &pairing.syy, &pairing.sxy, &pairing.syx]
        .iter()
        .all(|v| v.iter().all(|x| x.to_bits() == 0));
    // Control: the same data with distinct densities and b > 0 must produce nonzero fields.
    let control = PhysParams {
        rho2: 2.3,
        b: 0.4,
        ..matched
    };
    let j_control = control.flux_j(&frozen.mobility, &grad_mu)?;
    let f_control = control.marangoni_force(&state.phi, &theta, &g)?;
    let controls_live = j_control.max_abs() > 0.0 && f_control.max_abs() > 0.0;
    let ok = all_bits_zero(&j_direct) && all_bits_zero(&j_frozen) && all_bits_zero(&force) && pairing_zero && controls_live;
    Ok((
        ok,
        format!(
            "rho1 = rho2: J bitwise zero {}/{}; b = 0: force bitwise zero {}, stress bitwise zero {}; controls nonzero {}",
            all_bits_zero(&j_direct),
            all_bits_zero(&j_frozen),
            all_bits_zero(&force),
            pairing_zero,
            controls_live
        ),
    ))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Face arithmetic means of `m(q, 0)`; wall faces (unused under zero flux) get 1.
fn mobility_faces(q: &CellField, m: &CoefficientModel, g: &Grid) -> FaceField {
    let mut c = FaceField::constant(g, 1.0, 1.0);
    for j in 0..g.ny {
        for i in 1..g.nx {
            c.xcomp[g.xface(i, j)] = 0.5 * (m.eval(q.at(i - 1, j), 0.0) + m.eval(q.at(i, j), 0.0));
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            c.ycomp[g.yface(i, j)] = 0.5 * (m.eval(q.at(i, j - 1), 0.0) + m.eval(q.at(i, j), 0.0));
        }
    }
    c
}

fn interior_faces(f: &FaceField, g: &Grid) -> Vec<f64> {
    let mut v = vec![];
    for j in 0..g.ny {
        for i in 1..g.nx {
            v.push(f.xcomp[g.xface(i, j)]);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            v.push(f.ycomp[g.yface(i, j)]);
        }
    }
    v
}

fn random_faces(g: &Grid, rng: &mut ChaCha8Rng) -> FaceField {
    let mut f = FaceField::zeros(g);
    for v in f.xcomp.iter_mut().chain(f.ycomp.iter_mut()) {
        *v = rng.gen_range(-1.0..1.0);
    }
    f.zero_normal_boundary();
    f
}

/// Largest error of the four elliptic solvers, `(dense comparison, round trip)`, by name.
pub fn elliptic_errors() -> Result<Vec<(&'static str, f64, f64)>, CommandError> {
    let cfg = SolverConfig {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        max_iter: None,
    };
    let mobility = CoefficientModel::QuadraticPhi {
        base: 0.3,
        curvature: 0.6,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let small = Grid::new(4, 4, 1.0, 1.0)?;
    let large = Grid::new(16, 16, 1.0, 1.0)?;
    let zero_mean = |g: &Grid, rng: &mut ChaCha8Rng| {
        let mut f = random_cells(g, rng, -1.0, 1.0, ScalarBc::None);
        f.remove_mean();
        f
    };
    let mut out = vec![];

    // Unweighted Neumann inverse.
    let f = zero_mean(&small, &mut rng);
    let u = neumann_inverse(&f, &small, &cfg)?;
    let ones = FaceField::constant(&small, 1.0, 1.0);
    let dense = oracles::dense_weighted_neumann(&small, &ones, &f.values).ok_or_else(singular)?;
    let e_dense = max_abs_diff(&u.values, &dense) / max_abs(&dense).max(1.0);
    let f = zero_mean(&large, &mut rng);
    let u = neumann_inverse(&f, &large, &cfg)?;
    let lap = weighted_laplacian(&FaceField::constant(&large, 1.0, 1.0), &u.with_bc(ScalarBc::NeumannZero), &large)?;
    let minus_lap: Vec<f64> = lap.values.iter().map(|v| -v).collect();
    let e_trip = max_abs_diff(&minus_lap, &f.values) / max_abs(&f.values);
    out.push(("Neumann inverse", e_dense, e_trip));

    // Mobility-weighted Neumann inverse.
    let q = random_cells(&small, &mut rng, -0.9, 0.9, ScalarBc::NeumannZero);
    let f = zero_mean(&small, &mut rng);
    let u = weighted_neumann_inverse(&q, &mobility, &f, &small, &cfg)?;
    let dense =
        oracles::dense_weighted_neumann(&small, &mobility_faces(&q, &mobility, &small), &f.values).ok_or_else(singular)?;
    let e_dense = max_abs_diff(&u.values, &dense) / max_abs(&dense).max(1.0);
    let q = random_cells(&large, &mut rng, -0.9, 0.9, ScalarBc::NeumannZero);
    let f = zero_mean(&large, &mut rng);
    let u = weighted_neumann_inverse(&q, &mobility, &f, &large, &cfg)?;
    let c = mobility_faces(&q, &mobility, &large);
    let lap = weighted_laplacian(&c, &u.with_bc(ScalarBc::NeumannZero), &large)?;
    let minus_lap: Vec<f64> = lap.values.iter().map(|v| -v).collect();
    let e_trip = max_abs_diff(&minus_lap, &f.values) / max_abs(&f.values);
    out.push(("weighted Neumann inverse", e_dense, e_trip));

    // Harmonic extension.
    let trace = random_trace(&small, &mut rng);
    let s = harmonic_extension(&trace, &small, &cfg)?;
    let dense = oracles::dense_harmonic(&small, &trace).ok_or_else(singular)?;
    let e_dense = max_abs_diff(&s.values, &dense) / max_abs(&dense).max(1.0);
    let trace = random_trace(&large, &mut rng);
    let s = harmonic_extension(&trace, &large, &cfg)?;
    let scale = trace.values().fold(0.0, |m: f64, v| m.max(v.abs())) * 8.0 / (3.0 * large.dx * large.dx);
    let e_trip = oracles::harmonic_residual(&large, &trace, &s.values) / scale;
    out.push(("harmonic extension", e_dense, e_trip));

    // Stokes velocity.
    let f = random_faces(&small, &mut rng);
    let w = StokesOperator::new(&small, None, None, None)?.solve(&f, None, &cfg)?.u;
    let dense = oracles::dense_stokes(&small, &f).ok_or_else(singular)?;
    let e_dense = max_abs_diff(&w.to_flat(), &dense.to_flat()) / dense.max_abs().max(1.0);
    let f = random_faces(&large, &mut rng);
    let op = StokesOperator::new(&large, None, None, None)?;
    let sol = op.solve(&f, None, &cfg)?;
    let mut r = op.apply(&sol.u)?;
    r.axpy(1.0, &gradient(&sol.p.clone().with_bc(ScalarBc::NeumannZero), &large)?);
    r.axpy(-1.0, &f);
    let momentum = max_abs(&interior_faces(&r, &large)) / f.max_abs();
    let div = divergence(&sol.u, &large)?.max_abs() * large.dx / sol.u.max_abs();
    out.push(("Stokes solve", e_dense, momentum.max(div)));
    Ok(out)
}

fn singular() -> CommandError {
    CommandError::Core(Error::InvalidParameter("dense oracle matrix is singular".into()))
}

fn elliptic_oracles() -> Check {
    let errors = elliptic_errors()?;
    let ok = errors.iter().all(|(_, d, t)| *d <= 1e-8 && *t <= 1e-8);
    let detail = errors
        .iter()
        .map(|(n, d, t)| format!("{n}: dense 4x4 {d:.1e}, round trip 16x16 {t:.1e}"))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((ok, format!("{detail} (tol 1e-8)")))
}

fn self_convergence() -> Check {
    let r = cmd_convergence(&references::smooth())?;
    let diffs = r.differences.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", ");
    Ok((
        r.observed_order >= 0.9,
        format!(
            "differences to h/8 reference at T = {}: [{diffs}], observed order {:.3} (need 0.9)",
            r.final_time, r.observed_order
        ),
    ))
}

fn twin_dependence() -> Check {
    let cfg = references::twin();
    let eps = 1e-3;
    let r = cmd_twin(&cfg, eps)?;
    let zero = cmd_twin(&cfg, 0.0)?;
    let zero_max = zero.distance.iter().chain(&zero.distance_half).fold(0.0, |m: f64, v| m.max(v.abs()));
    let t = r.times.last().copied().unwrap_or(0.0);
    Ok((
        r.final_ratio >= 2.0 && zero_max <= 1e-12,
        format!(
            "Y(T = {t}) = {:.3e} for eps = {eps:e}, {:.3e} for eps/2, ratio {:.3} (need 2); eps = 0 gives max Y {zero_max:.1e}",
            r.distance.last().copied().unwrap_or(f64::NAN),
            r.distance_half.last().copied().unwrap_or(f64::NAN),
            r.final_ratio
        ),
    ))
}

fn determinism() -> Check {
    let cfg = references::marangoni();
    let (a, fa) = ledger_of(&cfg)?;
    let (b, fb) = ledger_of(&cfg)?;
    if let Some(e) = fa.or(fb) {
        return Ok((false, format!("reference run failed: {e}")));
    }
    let (sa, sb) = (a.to_csv_string(), b.to_csv_string());
    Ok((
        sa == sb,
        format!("two ledgers of {} rows, {} bytes each, {}", a.len(), sa.len(), if sa == sb { "identical" } else { "different" }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_configs_are_valid_and_reproducible() {
        for seed in 0..RANDOM_CONFIGS {
            let c = random_config(seed);
            c.validate().unwrap();
            assert_eq!(c, random_config(seed));
        }
        assert_ne!(random_config(0), random_config(1));
    }

    #[test]
    fn unknown_criterion_fails() {
        let o = run_criterion(42);
        assert!(!o.passed);
        assert!(o.detail.contains("42"));
    }

    #[test]
    fn thread_count_is_positive() {
        assert!(threads_from_env() >= 1);
    }
}
