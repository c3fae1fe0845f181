//! Temperature update in shifted form.
//!
//! Solves for `vartheta` (zero on the walls)
//!
//! ```text
//! vartheta / h + div(u vartheta) - div(kappa grad vartheta)
//!     = vartheta^k / h - div(u Theta_b) + div(kappa grad Theta_b)
//! ```
//!
//! which is backward Euler for `theta = vartheta + Theta_b` with wall data
//! `theta_b`. The matrix is an M-matrix whenever the cell Peclet number
//! `|u| dx / kappa` stays below 2, which gives the discrete maximum principle.

use crate::elliptic::{bicgstab, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{convect_into, div_c_grad_into, BoundaryTrace, CellField, Closure, FaceField, Grid, ScalarBc};

/// Largest cell Peclet number `|u_f| dx / kappa_f` over the faces.
pub fn cell_peclet(u: &FaceField, kappa: &FaceField, g: &Grid) -> f64 {
    let px = u
        .xcomp
        .iter()
        .zip(&kappa.xcomp)
        .map(|(v, k)| v.abs() * g.dx / k)
        .fold(0.0, f64::max);
    let py = u
        .ycomp
        .iter()
        .zip(&kappa.ycomp)
        .map(|(v, k)| v.abs() * g.dy / k)
        .fold(0.0, f64::max);
    px.max(py)
}

/// One backward-Euler step of the convective heat equation for `vartheta`.
///
/// `kappa` is the face conductivity frozen at the previous level and
/// `theta_b` the harmonic extension tagged with its wall trace.
pub fn heat_solve(
    vartheta_k: &CellField,
    theta_b: &CellField,
    u: &FaceField,
    kappa: &FaceField,
    h: f64,
    g: &Grid,
    cfg: &SolverConfig,
) -> Result<(CellField, SolveReport)> {
    vartheta_k.check(g)?;
    theta_b.check(g)?;
    u.check(g)?;
    kappa.check(g)?;
    let trace: &BoundaryTrace = match &theta_b.bc {
        ScalarBc::Dirichlet(t) => t,
        _ => return Err(Error::MissingBoundaryCondition("heat solve needs the wall trace of Theta_b")),
    };
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {h}")));
    }
    if !(kappa.min() > 0.0) {
        return Err(Error::CoefficientBound(format!(
            "conductivity must be positive, minimum is {}",
            kappa.min()
        )));
    }
    let n = g.n_cells();
    let inv_h = 1.0 / h;
    let mut rhs = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    convect_into(g, u, &theta_b.values, &mut tmp);
    div_c_grad_into(g, kappa, &theta_b.values, Closure::Dirichlet(Some(trace)), &mut rhs);
    for k in 0..n {
        rhs[k] += vartheta_k.values[k] * inv_h - tmp[k];
    }

    let hom = Closure::Dirichlet(None);
    let mut conv = vec![0.0; n];
    let apply = |x: &[f64], y: &mut [f64]| {
        convect_into(g, u, x, &mut conv);
        div_c_grad_into(g, kappa, x, hom, y);
        for k in 0..n {
            y[k] = x[k] * inv_h + conv[k] - y[k];
        }
    };
    let (ix, iy) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            let (i, j) = (k % g.nx, k / g.nx);
            // Wall faces use the half-cell distance, doubling their weight.
            let kw = kappa.xcomp[g.xface(i, j)] * if i == 0 { 2.0 } else { 1.0 };
            let ke = kappa.xcomp[g.xface(i + 1, j)] * if i + 1 == g.nx { 2.0 } else { 1.0 };
            let ks = kappa.ycomp[g.yface(i, j)] * if j == 0 { 2.0 } else { 1.0 };
            let kn = kappa.ycomp[g.yface(i, j + 1)] * if j + 1 == g.ny { 2.0 } else { 1.0 };
            inv_h + (kw + ke) * ix + (ks + kn) * iy
        })
        .collect();
    let mut pre = |r: &[f64], z: &mut [f64]| {
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
    };
    let mut x = vartheta_k.values.clone();
    let report = bicgstab(apply, Some(&mut pre), &rhs, &mut x, false, cfg)?;
    let out = CellField::from_values(g, x, ScalarBc::Dirichlet(BoundaryTrace::zeros(g)))?;
    Ok((out, report))
}
