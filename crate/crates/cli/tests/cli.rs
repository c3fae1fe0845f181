use std::fs;
use std::path::Path;
use std::process::Command;

use thermocap_cli::commands::{cmd_run, cmd_twin, CommandError, EXIT_OK, EXIT_SOLVER, EXIT_USAGE};
use thermocap_cli::config::parse_str;
use thermocap_cli::main_with_args;
use thermocap_cli::output::read_cell_snapshot;
use thermocap_core::grid::ScalarBc;

const QUIESCENT: &str = r#"
[grid]
nx = 8
ny = 8
lx = 4.0
ly = 4.0

[scheme]
h = 0.1
n_steps = 10

[initial]
phi = { kind = "uniform", value = 0.2 }
"#;

const HEATED: &str = r#"
[grid]
nx = 10
ny = 10
lx = 5.0
ly = 5.0

[physics]
rho1 = 1.0
rho2 = 2.0
b = 0.4
lambda0 = 0.05
conductivity = { kind = "constant", value = 0.5 }

[scheme]
h = 0.05
n_steps = 20
outer_tol = 1e-7
newton_tol = 1e-9

[initial]
phi = { kind = "bubble", center = [2.5, 2.0], radius = 1.2, width = 0.8 }
theta = { kind = "hot_spot", background = 0.1, peak = 1.0, center = [1.0, 1.0], radius = 1.0 }
velocity = { kind = "vortex", amplitude = 0.3 }

[boundary]
kind = "sinusoidal"
mean = 0.5
amplitude = 0.5
wavenumber = 1.0

[output]
snapshot_every = 10
vtk = true
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn quiescent_run_has_constant_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_str(QUIESCENT).unwrap();
    let s = cmd_run(&cfg, Some(dir.path())).unwrap();
    assert_eq!(s.exit_code(), EXIT_OK);
    let rows = &s.outcome.ledger.rows;
    assert_eq!(rows.len(), 11);
    for r in rows {
        assert!((r.energy.total - rows[0].energy.total).abs() <= 1e-12 * rows[0].energy.total.abs().max(1.0));
        assert!((r.mass - rows[0].mass).abs() <= 1e-14);
        assert_eq!(r.phi_max_abs, rows[0].phi_max_abs);
        assert!(r.energy.kinetic <= 1e-20);
    }
    let text = fs::read_to_string(&s.ledger_path).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("step,time,h,"));
}

#[test]
fn temperature_columns_stay_in_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_str(HEATED).unwrap();
    let s = cmd_run(&cfg, Some(dir.path())).unwrap();
    assert_eq!(s.exit_code(), EXIT_OK, "{:?}", s.outcome.failure);
    for r in &s.outcome.ledger.rows {
        assert!(r.theta_min >= -1e-10 && r.theta_max <= 1.0 + 1e-10, "{r:?}");
    }
}

#[test]
fn snapshots_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_str(HEATED).unwrap();
    let s = cmd_run(&cfg, Some(dir.path())).unwrap();
    // Steps 0, 10 and 20, six CSV files and one VTK file each.
    assert_eq!(s.snapshots.len(), 21);
    let snap = read_cell_snapshot(&dir.path().join("phi_000020.csv")).unwrap();
    let phi = snap.to_field(ScalarBc::NeumannZero).unwrap();
    assert_eq!(phi.values, s.outcome.state.phi.values);
    assert_eq!(snap.time, s.outcome.state.time);
    assert_eq!(snap.grid, s.outcome.state.grid);
    let vtk = fs::read_to_string(dir.path().join("state_000010.vtk")).unwrap();
    assert!(vtk.contains("DIMENSIONS 11 11 1"));
    assert!(vtk.contains("CELL_DATA 100"));
    let ux = fs::read_to_string(dir.path().join("ux_000020.csv")).unwrap();
    assert_eq!(ux.lines().nth(1).unwrap().split(',').count(), 11);
}

#[test]
fn malformed_snapshot_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "2 2 1 1 0\n1,2\n3\n").unwrap();
    let e = read_cell_snapshot(&p).unwrap_err();
    assert!(e.to_string().contains("row 1"), "{e}");
}

#[test]
fn repeated_runs_write_identical_ledgers() {
    let cfg = parse_str(HEATED).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = cmd_run(&cfg, Some(a.path())).unwrap();
    let sb = cmd_run(&cfg, Some(b.path())).unwrap();
    assert_eq!(fs::read(sa.ledger_path).unwrap(), fs::read(sb.ledger_path).unwrap());
    assert_eq!(
        fs::read(a.path().join("theta_000020.csv")).unwrap(),
        fs::read(b.path().join("theta_000020.csv")).unwrap()
    );
}

#[test]
fn huge_step_fails_with_solver_exit_and_flushed_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let text = HEATED
        .replace("h = 0.05\nn_steps = 20", "h = 1e4\nn_steps = 3\nouter_max = 2\nmax_halvings = 1")
        .replace("snapshot_every = 10", "snapshot_every = 0");
    let cfg_path = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let code = main_with_args(["thermocap", "run", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_SOLVER);
    let ledger = fs::read_to_string(out.join("ledger.csv")).unwrap();
    assert!(ledger.lines().count() >= 2, "{ledger}");
}

#[test]
fn config_errors_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), &QUIESCENT.replace("[scheme]", "[scheme]\nviscocity = 1.0"));
    assert_eq!(main_with_args(["thermocap", "run", p.to_str().unwrap()]), EXIT_USAGE);
    let missing = dir.path().join("missing.toml");
    assert_eq!(main_with_args(["thermocap", "run", missing.to_str().unwrap()]), EXIT_USAGE);
    assert_eq!(main_with_args(["thermocap", "frobnicate"]), EXIT_USAGE);
    assert_eq!(main_with_args(["thermocap", "twin", p.to_str().unwrap()]), EXIT_USAGE);
}

#[test]
fn twin_restrictions_are_enforced() {
    let cfg = parse_str(HEATED).unwrap();
    let e = cmd_twin(&cfg, 1e-3).unwrap_err();
    assert!(matches!(e, CommandError::Invalid(_)));
    assert!(e.to_string().contains("matched densities"), "{e}");
    let theta_dependent = HEATED.replace("rho2 = 2.0", "rho2 = 1.0").replace(
        "[scheme]",
        "mobility = { kind = \"bounded_rational\", lo = 0.1, hi = 0.2, beta_phi = 0.0, beta_theta = 1.0 }\n\n[scheme]",
    );
    let e = cmd_twin(&parse_str(&theta_dependent).unwrap(), 1e-3).unwrap_err();
    assert!(e.to_string().contains("temperature-independent mobility"), "{e}");
    let phi_dependent = HEATED
        .replace("rho2 = 2.0", "rho2 = 1.0")
        .replace("{ kind = \"constant\", value = 0.5 }", "{ kind = \"quadratic_phi\", base = 0.5, curvature = 1.0 }");
    let e = cmd_twin(&parse_str(&phi_dependent).unwrap(), 1e-3).unwrap_err();
    assert!(e.to_string().contains("conductivity"), "{e}");
}

#[test]
fn twin_with_zero_perturbation_is_exactly_zero() {
    let text = HEATED.replace("rho2 = 2.0", "rho2 = 1.0").replace("n_steps = 20", "n_steps = 5");
    let r = cmd_twin(&parse_str(&text).unwrap(), 0.0).unwrap();
    assert_eq!(r.distance.len(), 6);
    assert!(r.distance.iter().chain(&r.distance_half).all(|&d| d == 0.0));
}

#[test]
fn binary_reports_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_thermocap");
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), QUIESCENT);
    let out = dir.path().join("out");
    let status = Command::new(exe)
        .args(["run", p.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    assert!(out.join("ledger.csv").exists());

    let bad = write_config(dir.path(), &QUIESCENT.replace("nx = 8", "nx = 0"));
    let o = Command::new(exe).args(["run", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    assert!(!o.stderr.is_empty());

    let o = Command::new(exe).args(["verify", "--only", "6"]).output().unwrap();
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["criteria"][0]["id"], 6);
}
