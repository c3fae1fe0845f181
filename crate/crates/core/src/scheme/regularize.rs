//! Smoothing of the initial phase field and temperature.

use crate::elliptic::{cg, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{div_c_grad_into, BoundaryTrace, CellField, Closure, FaceField, Grid, ScalarBc};

/// Distance from `+-1` kept after smoothing.
pub const PHI_MARGIN: f64 = 1e-9;

fn shifted_helmholtz(
    g: &Grid,
    tau: f64,
    closure: Closure<'_>,
    rhs: &[f64],
    x: &mut [f64],
    cfg: &SolverConfig,
) -> Result<()> {
    let one = FaceField::constant(g, 1.0, 1.0);
    let hom = closure.homogeneous();
    let apply = |v: &[f64], y: &mut [f64]| {
        div_c_grad_into(g, &one, v, hom, y);
        for k in 0..v.len() {
            y[k] = v[k] - tau * y[k];
        }
    };
    // Affine wall data moved to the right-hand side.
    let mut b = vec![0.0; rhs.len()];
    div_c_grad_into(g, &one, &vec![0.0; rhs.len()], closure, &mut b);
    for k in 0..b.len() {
        b[k] = rhs[k] + tau * b[k];
    }
    let (ix, iy) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let dirichlet = !matches!(closure, Closure::Neumann);
    let diag: Vec<f64> = (0..rhs.len())
        .map(|k| {
            let (i, j) = (k % g.nx, k / g.nx);
            let side = |edge: bool, w: f64| match (edge, dirichlet) {
                (false, _) => w,
                (true, true) => 2.0 * w,
                (true, false) => 0.0,
            };
            1.0 + tau
                * (side(i == 0, ix) + side(i + 1 == g.nx, ix) + side(j == 0, iy) + side(j + 1 == g.ny, iy))
        })
        .collect();
    let mut pre = |r: &[f64], z: &mut [f64]| {
        for k in 0..r.len() {
            z[k] = r[k] / diag[k];
        }
    };
    cg(apply, Some(&mut pre), &b, x, false, cfg)?;
    Ok(())
}

/// One implicit heat step of length `1/n` with zero-flux walls, then a
/// clamp to `[-1 + PHI_MARGIN, 1 - PHI_MARGIN]` that restores the mean.
pub fn regularize_phi0(phi0: &CellField, n: usize, g: &Grid, cfg: &SolverConfig) -> Result<CellField> {
    phi0.check(g)?;
    let target = phi0.mean();
    if !(target.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "initial phase field mean {target} must lie in (-1, 1)"
        )));
    }
    if phi0.max_abs() > 1.0 || !phi0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "initial phase field must satisfy |phi| <= 1, max is {}",
            phi0.max_abs()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("smoothing parameter N must be positive".into()));
    }
    let tau = 1.0 / n as f64;
    let mut x = phi0.values.clone();
    let tight = SolverConfig {
        rel_tol: cfg.rel_tol.min(1e-13),
        abs_tol: cfg.abs_tol.min(1e-15),
        ..*cfg
    };
    shifted_helmholtz(g, tau, Closure::Neumann, &phi0.values, &mut x, &tight)?;
    let lim = 1.0 - PHI_MARGIN;
    let shift = target - x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v += shift);
    for _ in 0..100 {
        x.iter_mut().for_each(|v| *v = v.clamp(-lim, lim));
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let d = target - mean;
        if d == 0.0 {
            break;
        }
        // Spread the defect over cells with room to move.
        let free = x.iter().filter(|v| if d > 0.0 { **v < lim } else { **v > -lim }).count();
        if free == 0 {
            break;
        }
        let step = d * x.len() as f64 / free as f64;
        let mut moved = false;
        for v in x.iter_mut() {
            if (d > 0.0 && *v < lim) || (d < 0.0 && *v > -lim) {
                let nv = (*v + step).clamp(-lim, lim);
                moved |= nv != *v;
                *v = nv;
            }
        }
        if !moved {
            break;
        }
    }
    CellField::from_values(g, x, ScalarBc::NeumannZero)
}

/// Solves `varpi - (1/n) Delta varpi = theta0` with `varpi = theta_b` on the walls.
/// Returns `varpi` (tagged with the trace) and `vartheta0 = varpi - Theta_b`.
pub fn regularize_theta0(
    theta0: &CellField,
    trace: &BoundaryTrace,
    theta_b: &CellField,
    n: usize,
    g: &Grid,
    cfg: &SolverConfig,
) -> Result<(CellField, CellField)> {
    theta0.check(g)?;
    trace.check(g)?;
    theta_b.check(g)?;
    if !theta0.is_finite() {
        return Err(Error::InvalidParameter("initial temperature is not finite".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("smoothing parameter N must be positive".into()));
    }
    let tau = 1.0 / n as f64;
    let mut x = theta0.values.clone();
    let tight = SolverConfig {
        rel_tol: cfg.rel_tol.min(1e-13),
        abs_tol: cfg.abs_tol.min(1e-15),
        ..*cfg
    };
    shifted_helmholtz(g, tau, Closure::Dirichlet(Some(trace)), &theta0.values, &mut x, &tight)?;
    let varpi = CellField::from_values(g, x, ScalarBc::Dirichlet(trace.clone()))?;
    let vartheta = varpi
        .zip_map(theta_b, |a, b| a - b)
        .with_bc(ScalarBc::Dirichlet(BoundaryTrace::zeros(g)));
    Ok((varpi, vartheta))
}
