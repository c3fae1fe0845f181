//! Discrete harmonic extension of wall data.
//!
//! The wall closure is the quadratic ghost extrapolation, so the discrete
//! problem reproduces every harmonic quadratic exactly. The resulting matrix
//! is a nonsymmetric M-matrix (each boundary row is a convex combination of
//! its neighbours and the wall value), which gives the discrete maximum
//! principle; it is solved with BiCGStab.

use super::{bicgstab, SolverConfig};
use crate::error::Result;
use crate::grid::{div_c_grad_into, BoundaryTrace, CellField, Closure, FaceField, Grid, ScalarBc};

/// `Theta` with `-Delta_h Theta = 0` and wall values `trace`; tagged Dirichlet with `trace`.
pub fn harmonic_extension(trace: &BoundaryTrace, g: &Grid, cfg: &SolverConfig) -> Result<CellField> {
    trace.check(g)?;
    let one = FaceField::constant(g, 1.0, 1.0);
    let n = g.n_cells();
    let zero = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    div_c_grad_into(g, &one, &zero, Closure::DirichletSecondOrder(Some(trace)), &mut rhs);
    let hom = Closure::DirichletSecondOrder(None);
    let apply = |x: &[f64], y: &mut [f64]| {
        div_c_grad_into(g, &one, x, hom, y);
        y.iter_mut().for_each(|v| *v = -*v);
    };
    let (ix, iy) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            let (i, j) = (k % g.nx, k / g.nx);
            let wx = |edge: bool| if edge { 3.0 * ix } else { ix };
            let wy = |edge: bool| if edge { 3.0 * iy } else { iy };
            wx(i == 0) + wx(i + 1 == g.nx) + wy(j == 0) + wy(j + 1 == g.ny)
        })
        .collect();
    let mut pre = |r: &[f64], z: &mut [f64]| {
        for k in 0..r.len() {
            z[k] = r[k] / diag[k];
        }
    };
    // Start from the mean wall value, the exact answer for constant data.
    let mean = trace.values().sum::<f64>() / (2 * (g.nx + g.ny)) as f64;
    let mut x = vec![mean; n];
    bicgstab(apply, Some(&mut pre), &rhs, &mut x, false, cfg)?;
    CellField::from_values(g, x, ScalarBc::Dirichlet(trace.clone()))
}
