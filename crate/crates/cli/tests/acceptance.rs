//! The ten acceptance criteria, one test each.
//!
//! Every test prints a single `[PASS]` or `[FAIL]` line (visible with
//! `--nocapture`, and in the failure message otherwise).

use thermocap_cli::verify::run_criterion;

fn check(id: usize) {
    let outcome = run_criterion(id);
    println!("{}", outcome.line());
    assert!(outcome.passed, "{}", outcome.line());
}

#[test]
fn criterion_01_mass_conservation() {
    check(1);
}

#[test]
fn criterion_02_temperature_maximum_principle() {
    check(2);
}

#[test]
fn criterion_03_phase_field_bounds() {
    check(3);
}

#[test]
fn criterion_04_discrete_energy_identity() {
    check(4);
}

#[test]
fn criterion_05_isothermal_dissipativity() {
    check(5);
}

#[test]
fn criterion_06_structural_degenerations() {
    check(6);
}

#[test]
fn criterion_07_elliptic_oracles() {
    check(7);
}

#[test]
fn criterion_08_temporal_self_convergence() {
    check(8);
}

#[test]
fn criterion_09_twin_run_continuous_dependence() {
    check(9);
}

#[test]
fn criterion_10_determinism() {
    check(10);
}
