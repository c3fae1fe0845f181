//! Zero-mean inverses of Neumann Laplacians.

use super::{cg, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{div_c_grad_into, CellField, Closure, FaceField, Grid, ScalarBc};
use crate::physics::CoefficientModel;

/// Fails unless `|mean(f)| <= 1e-12 * rms(f)`.
pub(crate) fn check_zero_mean(f: &[f64]) -> Result<()> {
    let n = f.len() as f64;
    let mean = f.iter().sum::<f64>() / n;
    let rms = (f.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if mean.abs() <= 1e-12 * rms + f64::MIN_POSITIVE {
        Ok(())
    } else {
        Err(Error::Compatibility(format!(
            "right-hand side must have zero mean, mean is {mean:e} (rms {rms:e})"
        )))
    }
}

/// `-div(c grad .)` with zero-flux walls and its Jacobi diagonal.
pub(crate) struct JacobiLaplacian<'a> {
    pub grid: &'a Grid,
    pub coef: &'a FaceField,
    pub inv_diag: Vec<f64>,
}

impl<'a> JacobiLaplacian<'a> {
    pub fn new(grid: &'a Grid, coef: &'a FaceField) -> Self {
        let g = grid;
        let mut inv_diag = vec![0.0; g.n_cells()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let mut d = 0.0;
                if i > 0 {
                    d += coef.xcomp[g.xface(i, j)] / (g.dx * g.dx);
                }
                if i + 1 < g.nx {
                    d += coef.xcomp[g.xface(i + 1, j)] / (g.dx * g.dx);
                }
                if j > 0 {
                    d += coef.ycomp[g.yface(i, j)] / (g.dy * g.dy);
                }
                if j + 1 < g.ny {
                    d += coef.ycomp[g.yface(i, j + 1)] / (g.dy * g.dy);
                }
                inv_diag[g.cell(i, j)] = 1.0 / d;
            }
        }
        Self { grid, coef, inv_diag }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        div_c_grad_into(self.grid, self.coef, x, Closure::Neumann, y);
        y.iter_mut().for_each(|v| *v = -*v);
    }

    /// Zero-mean solution of `-div(c grad u) = f`, starting from `u`.
    pub fn solve(&self, f: &[f64], u: &mut [f64], cfg: &SolverConfig) -> Result<SolveReport> {
        let mut pre = |r: &[f64], z: &mut [f64]| {
            for k in 0..r.len() {
                z[k] = r[k] * self.inv_diag[k];
            }
        };
        cg(|x, y| self.apply(x, y), Some(&mut pre), f, u, true, cfg)
    }
}

fn positive_faces(c: &FaceField) -> Result<()> {
    let m = c.min();
    if m > 0.0 {
        Ok(())
    } else {
        Err(Error::CoefficientBound(format!(
            "face coefficient must be positive, minimum is {m}"
        )))
    }
}

/// Zero-mean `u` with `-div(c grad u) = f` and zero flux through the walls.
pub fn weighted_neumann_inverse_faces(
    c: &FaceField,
    f: &CellField,
    g: &Grid,
    cfg: &SolverConfig,
) -> Result<(CellField, SolveReport)> {
    c.check(g)?;
    f.check(g)?;
    positive_faces(c)?;
    check_zero_mean(&f.values)?;
    let op = JacobiLaplacian::new(g, c);
    let mut u = vec![0.0; g.n_cells()];
    let report = op.solve(&f.values, &mut u, cfg)?;
    Ok((CellField::from_values(g, u, ScalarBc::NeumannZero)?, report))
}

/// Zero-mean `u` with `-Delta u = f` and zero normal derivative.
pub fn neumann_inverse(f: &CellField, g: &Grid, cfg: &SolverConfig) -> Result<CellField> {
    let one = FaceField::constant(g, 1.0, 1.0);
    Ok(weighted_neumann_inverse_faces(&one, f, g, cfg)?.0)
}

/// Zero-mean `u` with `-div(m(q) grad u) = f`; the mobility is evaluated as `m(q, 0)`
/// in each cell and averaged to faces arithmetically.
pub fn weighted_neumann_inverse(
    q: &CellField,
    m: &CoefficientModel,
    f: &CellField,
    g: &Grid,
    cfg: &SolverConfig,
) -> Result<CellField> {
    q.check(g)?;
    let zero = CellField::zeros(g, ScalarBc::None);
    let c = m.eval_faces(q, &zero, g, crate::grid::FaceMean::Arithmetic)?;
    if c.min() < m.lower_bound() {
        return Err(Error::CoefficientBound(format!(
            "mobility {} below its declared bound {}",
            c.min(),
            m.lower_bound()
        )));
    }
    Ok(weighted_neumann_inverse_faces(&c, f, g, cfg)?.0)
}
