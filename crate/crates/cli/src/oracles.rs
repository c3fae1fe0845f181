//! Dense reference solutions for the elliptic solvers.
//!
//! Every matrix here is assembled from its stencil directly, without calling
//! the operators under test, and factorized with a dense LU.

use nalgebra::{DMatrix, DVector};
use thermocap_core::grid::{BoundaryTrace, FaceField, Grid};

fn lu_solve(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    a.lu().solve(&b)
}

/// Zero-mean solution of `-div(c grad u) = f` with zero flux at the walls.
pub fn dense_weighted_neumann(g: &Grid, c: &FaceField, f: &[f64]) -> Option<Vec<f64>> {
    let n = g.n_cells();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    let mut couple = |k: usize, l: usize, w: f64| {
        a[(k, k)] += w;
        a[(k, l)] -= w;
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.cell(i, j);
            if i > 0 {
                couple(k, g.cell(i - 1, j), c.xcomp[g.xface(i, j)] / (g.dx * g.dx));
            }
            if i + 1 < g.nx {
                couple(k, g.cell(i + 1, j), c.xcomp[g.xface(i + 1, j)] / (g.dx * g.dx));
            }
            if j > 0 {
                couple(k, g.cell(i, j - 1), c.ycomp[g.yface(i, j)] / (g.dy * g.dy));
            }
            if j + 1 < g.ny {
                couple(k, g.cell(i, j + 1), c.ycomp[g.yface(i, j + 1)] / (g.dy * g.dy));
            }
        }
    }
    for k in 0..n {
        a[(k, n)] = 1.0;
        a[(n, k)] = 1.0;
    }
    let mut b = DVector::zeros(n + 1);
    b.rows_mut(0, n).copy_from_slice(f);
    lu_solve(a, b).map(|x| x.rows(0, n).iter().copied().collect())
}

/// Discrete harmonic function with wall values `trace`, using the quadratic ghost closure.
pub fn dense_harmonic(g: &Grid, trace: &BoundaryTrace) -> Option<Vec<f64>> {
    let (m, b) = harmonic_system(g, trace);
    lu_solve(m, b).map(|x| x.iter().copied().collect())
}

/// `(M, b)` with `M s = b` the discrete Laplace equation.
fn harmonic_system(g: &Grid, trace: &BoundaryTrace) -> (DMatrix<f64>, DVector<f64>) {
    let n = g.n_cells();
    let mut m = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    let (ix, iy) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.cell(i, j);
            // Row k of Delta s; wall values move to the right-hand side.
            if i + 1 < g.nx {
                m[(k, g.cell(i + 1, j))] += ix;
                m[(k, k)] -= ix;
            } else {
                m[(k, k)] -= 3.0 * ix;
                m[(k, g.cell(i - 1, j))] += ix / 3.0;
                b[k] -= 8.0 / 3.0 * ix * trace.east[j];
            }
            if i > 0 {
                m[(k, g.cell(i - 1, j))] += ix;
                m[(k, k)] -= ix;
            } else {
                m[(k, k)] -= 3.0 * ix;
                m[(k, g.cell(i + 1, j))] += ix / 3.0;
                b[k] -= 8.0 / 3.0 * ix * trace.west[j];
            }
            if j + 1 < g.ny {
                m[(k, g.cell(i, j + 1))] += iy;
                m[(k, k)] -= iy;
            } else {
                m[(k, k)] -= 3.0 * iy;
                m[(k, g.cell(i, j - 1))] += iy / 3.0;
                b[k] -= 8.0 / 3.0 * iy * trace.north[i];
            }
            if j > 0 {
                m[(k, g.cell(i, j - 1))] += iy;
                m[(k, k)] -= iy;
            } else {
                m[(k, k)] -= 3.0 * iy;
                m[(k, g.cell(i, j + 1))] += iy / 3.0;
                b[k] -= 8.0 / 3.0 * iy * trace.south[i];
            }
        }
    }
    (m, b)
}

/// Max-norm of the discrete Laplace residual of `s` for the wall data `trace`.
pub fn harmonic_residual(g: &Grid, trace: &BoundaryTrace, s: &[f64]) -> f64 {
    let (m, b) = harmonic_system(g, trace);
    (m * DVector::from_column_slice(s) - b).amax()
}

/// Interior face unknowns of a no-slip velocity.
struct FaceNumbering {
    x: Vec<Option<usize>>,
    y: Vec<Option<usize>>,
    count: usize,
}

impl FaceNumbering {
    fn new(g: &Grid) -> Self {
        let mut count = 0;
        let mut x = vec![None; g.n_xfaces()];
        for j in 0..g.ny {
            for i in 1..g.nx {
                x[g.xface(i, j)] = Some(count);
                count += 1;
            }
        }
        let mut y = vec![None; g.n_yfaces()];
        for j in 1..g.ny {
            for i in 0..g.nx {
                y[g.yface(i, j)] = Some(count);
                count += 1;
            }
        }
        Self { x, y, count }
    }
}

/// Velocity of `-Delta w + grad p = f`, `div w = 0`, `w = 0` on the walls,
/// with the tangential wall condition imposed by odd reflection.
pub fn dense_stokes(g: &Grid, f: &FaceField) -> Option<FaceField> {
    let num = FaceNumbering::new(g);
    let nu = num.count;
    let np = g.n_cells();
    let size = nu + np + 1;
    let mut a = DMatrix::zeros(size, size);
    let mut b = DVector::zeros(size);
    let (ix, iy) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let idx_x = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i > g.nx as isize || j >= g.ny as isize {
            return None;
        }
        num.x[g.xface(i as usize, j as usize)]
    };
    let idx_y = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i >= g.nx as isize || j > g.ny as isize {
            return None;
        }
        num.y[g.yface(i as usize, j as usize)]
    };
    for j in 0..g.ny as isize {
        for i in 1..g.nx as isize {
            let r = idx_x(i, j).expect("interior face");
            b[r] = f.xcomp[g.xface(i as usize, j as usize)];
            // Normal direction: neighbours are faces or walls with zero velocity.
            a[(r, r)] += 2.0 * ix;
            for di in [-1, 1] {
                if let Some(c) = idx_x(i + di, j) {
                    a[(r, c)] -= ix;
                }
            }
            // Tangential direction: a missing neighbour is the reflected ghost `-u`.
            for dj in [-1, 1] {
                match idx_x(i, j + dj) {
                    Some(c) => {
                        a[(r, r)] += iy;
                        a[(r, c)] -= iy;
                    }
                    None => a[(r, r)] += 2.0 * iy,
                }
            }
            a[(r, nu + g.cell(i as usize, j as usize))] += 1.0 / g.dx;
            a[(r, nu + g.cell(i as usize - 1, j as usize))] -= 1.0 / g.dx;
        }
    }
    for j in 1..g.ny as isize {
        for i in 0..g.nx as isize {
            let r = idx_y(i, j).expect("interior face");
            b[r] = f.ycomp[g.yface(i as usize, j as usize)];
            a[(r, r)] += 2.0 * iy;
            for dj in [-1, 1] {
                if let Some(c) = idx_y(i, j + dj) {
                    a[(r, c)] -= iy;
                }
            }
            for di in [-1, 1] {
                match idx_y(i + di, j) {
                    Some(c) => {
                        a[(r, r)] += ix;
                        a[(r, c)] -= ix;
                    }
                    None => a[(r, r)] += 2.0 * ix,
                }
            }
            a[(r, nu + g.cell(i as usize, j as usize))] += 1.0 / g.dy;
            a[(r, nu + g.cell(i as usize, j as usize - 1))] -= 1.0 / g.dy;
        }
    }
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let r = nu + g.cell(i as usize, j as usize);
            if let Some(c) = idx_x(i + 1, j) {
                a[(r, c)] += 1.0 / g.dx;
            }
            if let Some(c) = idx_x(i, j) {
                a[(r, c)] -= 1.0 / g.dx;
            }
            if let Some(c) = idx_y(i, j + 1) {
                a[(r, c)] += 1.0 / g.dy;
            }
            if let Some(c) = idx_y(i, j) {
                a[(r, c)] -= 1.0 / g.dy;
            }
            // Multiplier for the redundant continuity row, and the pressure gauge.
            a[(r, size - 1)] = 1.0;
            a[(size - 1, r)] = 1.0;
        }
    }
    let x = lu_solve(a, b)?;
    let mut w = FaceField::zeros(g);
    for (k, slot) in num.x.iter().enumerate() {
        if let Some(c) = slot {
            w.xcomp[k] = x[*c];
        }
    }
    for (k, slot) in num.y.iter().enumerate() {
        if let Some(c) = slot {
            w.ycomp[k] = x[*c];
        }
    }
    Some(w)
}
