//! Scalar finite-difference operators on the staggered grid.

use serde::{Deserialize, Serialize};

use super::{BoundaryTrace, CellField, FaceField, Grid, ScalarBc};
use crate::error::{Error, Result};

/// How the gradient treats the wall faces.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Closure<'a> {
    /// Zero normal derivative: wall-face gradient is 0.
    Neumann,
    /// One-sided difference against the wall value over half a cell; `None` means a zero trace.
    Dirichlet(Option<&'a BoundaryTrace>),
    /// Quadratic ghost extrapolation `(9 s0 - 8 b - s1) / 3h`, exact for quadratics.
    DirichletSecondOrder(Option<&'a BoundaryTrace>),
}

impl<'a> Closure<'a> {
    pub(crate) fn from_bc(bc: &'a ScalarBc) -> Result<Self> {
        match bc {
            ScalarBc::NeumannZero => Ok(Closure::Neumann),
            ScalarBc::Dirichlet(t) => Ok(Closure::Dirichlet(Some(t))),
            ScalarBc::None => Err(Error::MissingBoundaryCondition("gradient")),
        }
    }

    /// Same closure with the wall data replaced by zero (the linear part of the affine map).
    pub(crate) fn homogeneous(self) -> Closure<'static> {
        match self {
            Closure::Neumann => Closure::Neumann,
            Closure::Dirichlet(_) => Closure::Dirichlet(None),
            Closure::DirichletSecondOrder(_) => Closure::DirichletSecondOrder(None),
        }
    }
}

#[inline]
fn wall(trace: Option<&BoundaryTrace>, side: fn(&BoundaryTrace) -> &Vec<f64>, k: usize) -> f64 {
    trace.map_or(0.0, |t| side(t)[k])
}

/// Face gradient of a cell array.
pub(crate) fn gradient_into(g: &Grid, s: &[f64], closure: Closure<'_>, gx: &mut [f64], gy: &mut [f64]) {
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
    for j in 0..ny {
        let row = nx * j;
        for i in 1..nx {
            gx[g.xface(i, j)] = (s[row + i] - s[row + i - 1]) / dx;
        }
        let (w, e) = match closure {
            Closure::Neumann => (0.0, 0.0),
            Closure::Dirichlet(t) => {
                let bw = wall(t, |t| &t.west, j);
                let be = wall(t, |t| &t.east, j);
                (
                    (s[row] - bw) / (0.5 * dx),
                    (be - s[row + nx - 1]) / (0.5 * dx),
                )
            }
            Closure::DirichletSecondOrder(t) => {
                let bw = wall(t, |t| &t.west, j);
                let be = wall(t, |t| &t.east, j);
                (
                    (9.0 * s[row] - 8.0 * bw - s[row + 1]) / (3.0 * dx),
                    (8.0 * be - 9.0 * s[row + nx - 1] + s[row + nx - 2]) / (3.0 * dx),
                )
            }
        };
        gx[g.xface(0, j)] = w;
        gx[g.xface(nx, j)] = e;
    }
    for j in 1..ny {
        for i in 0..nx {
            gy[g.yface(i, j)] = (s[g.cell(i, j)] - s[g.cell(i, j - 1)]) / dy;
        }
    }
    for i in 0..nx {
        let (south, north) = match closure {
            Closure::Neumann => (0.0, 0.0),
            Closure::Dirichlet(t) => {
                let bs = wall(t, |t| &t.south, i);
                let bn = wall(t, |t| &t.north, i);
                (
                    (s[g.cell(i, 0)] - bs) / (0.5 * dy),
                    (bn - s[g.cell(i, ny - 1)]) / (0.5 * dy),
                )
            }
            Closure::DirichletSecondOrder(t) => {
                let bs = wall(t, |t| &t.south, i);
                let bn = wall(t, |t| &t.north, i);
                (
                    (9.0 * s[g.cell(i, 0)] - 8.0 * bs - s[g.cell(i, 1)]) / (3.0 * dy),
                    (8.0 * bn - 9.0 * s[g.cell(i, ny - 1)] + s[g.cell(i, ny - 2)]) / (3.0 * dy),
                )
            }
        };
        gy[g.yface(i, 0)] = south;
        gy[g.yface(i, ny)] = north;
    }
}

pub(crate) fn divergence_into(g: &Grid, fx: &[f64], fy: &[f64], out: &mut [f64]) {
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
    for j in 0..ny {
        for i in 0..nx {
            out[g.cell(i, j)] = (fx[g.xface(i + 1, j)] - fx[g.xface(i, j)]) / dx
                + (fy[g.yface(i, j + 1)] - fy[g.yface(i, j)]) / dy;
        }
    }
}

/// `div(c grad s)` for a cell array with the given wall closure.
pub(crate) fn div_c_grad_into(g: &Grid, c: &FaceField, s: &[f64], closure: Closure<'_>, out: &mut [f64]) {
    let mut gx = vec![0.0; g.n_xfaces()];
    let mut gy = vec![0.0; g.n_yfaces()];
    gradient_into(g, s, closure, &mut gx, &mut gy);
    for (v, cf) in gx.iter_mut().zip(&c.xcomp) {
        *v *= cf;
    }
    for (v, cf) in gy.iter_mut().zip(&c.ycomp) {
        *v *= cf;
    }
    divergence_into(g, &gx, &gy, out);
}

/// `div(adv * s_face)` with centred face values; wall faces use the adjacent cell.
pub(crate) fn convect_into(g: &Grid, adv: &FaceField, s: &[f64], out: &mut [f64]) {
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
    for j in 0..ny {
        for i in 0..nx {
            let c = g.cell(i, j);
            let sw = if i == 0 { s[c] } else { 0.5 * (s[c] + s[c - 1]) };
            let se = if i == nx - 1 { s[c] } else { 0.5 * (s[c] + s[c + 1]) };
            let ss = if j == 0 { s[c] } else { 0.5 * (s[c] + s[c - nx]) };
            let sn = if j == ny - 1 { s[c] } else { 0.5 * (s[c] + s[c + nx]) };
            out[c] = (adv.xcomp[g.xface(i + 1, j)] * se - adv.xcomp[g.xface(i, j)] * sw) / dx
                + (adv.ycomp[g.yface(i, j + 1)] * sn - adv.ycomp[g.yface(i, j)] * ss) / dy;
        }
    }
}

/// Discrete gradient, honouring the field's boundary tag on wall faces.
pub fn gradient(s: &CellField, g: &Grid) -> Result<FaceField> {
    s.check(g)?;
    let closure = Closure::from_bc(&s.bc)?;
    let mut out = FaceField::zeros(g);
    gradient_into(g, &s.values, closure, &mut out.xcomp, &mut out.ycomp);
    Ok(out)
}

/// Per-cell flux balance. The result carries no boundary tag.
pub fn divergence(f: &FaceField, g: &Grid) -> Result<CellField> {
    f.check(g)?;
    let mut out = CellField::zeros(g, ScalarBc::None);
    divergence_into(g, &f.xcomp, &f.ycomp, &mut out.values);
    Ok(out)
}

/// `div(c grad s)`; `c` must be strictly positive on every face.
pub fn weighted_laplacian(c: &FaceField, s: &CellField, g: &Grid) -> Result<CellField> {
    c.check(g)?;
    s.check(g)?;
    let cmin = c.min();
    if !(cmin > 0.0) {
        return Err(Error::CoefficientBound(format!(
            "face coefficient must be positive, minimum is {cmin}"
        )));
    }
    let closure = Closure::from_bc(&s.bc)?;
    let mut out = CellField::zeros(g, ScalarBc::None);
    div_c_grad_into(g, c, &s.values, closure, &mut out.values);
    Ok(out)
}

/// Divergence-form transport `div(adv s)` with centred interpolation.
///
/// For discretely divergence-free `adv` with zero wall-normal components,
/// `<convective_term(adv, s), s> = 0` exactly.
pub fn convective_term(adv: &FaceField, s: &CellField, g: &Grid) -> Result<CellField> {
    adv.check(g)?;
    s.check(g)?;
    let mut out = CellField::zeros(g, ScalarBc::None);
    convect_into(g, adv, &s.values, &mut out.values);
    Ok(out)
}

/// Fields that carry the grid's L2 inner product.
pub trait GridField {
    fn weighted_dot(&self, other: &Self, g: &Grid) -> Result<f64>;

    fn norm(&self, g: &Grid) -> Result<f64> {
        Ok(self.weighted_dot(self, g)?.sqrt())
    }
}

impl GridField for CellField {
    fn weighted_dot(&self, other: &Self, g: &Grid) -> Result<f64> {
        self.check(g)?;
        other.check(g)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * g.cell_area())
    }
}

impl GridField for FaceField {
    fn weighted_dot(&self, other: &Self, g: &Grid) -> Result<f64> {
        self.check(g)?;
        other.check(g)?;
        Ok(face_dot(g, &self.xcomp, &self.ycomp, &other.xcomp, &other.ycomp))
    }
}

pub(crate) fn face_dot(g: &Grid, ax: &[f64], ay: &[f64], bx: &[f64], by: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let k = g.xface(i, j);
            s += g.xface_weight(i) * ax[k] * bx[k];
        }
    }
    for j in 0..=g.ny {
        let w = g.yface_weight(j);
        for i in 0..g.nx {
            let k = g.yface(i, j);
            s += w * ay[k] * by[k];
        }
    }
    s
}

/// The grid L2 inner product (cell area weights; wall faces count half).
pub fn inner<F: GridField>(a: &F, b: &F, g: &Grid) -> Result<f64> {
    a.weighted_dot(b, g)
}

/// Rule for moving cell data onto faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceMean {
    #[default]
    Arithmetic,
    Harmonic,
}

impl FaceMean {
    #[inline]
    fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            FaceMean::Arithmetic => 0.5 * (a + b),
            FaceMean::Harmonic => 2.0 * a * b / (a + b),
        }
    }
}

/// Interior faces take the mean of both neighbours, wall faces the adjacent cell value.
pub fn face_mean(s: &CellField, g: &Grid, mean: FaceMean) -> Result<FaceField> {
    s.check(g)?;
    let v = &s.values;
    let mut out = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            out.xcomp[g.xface(i, j)] = if i == 0 {
                v[g.cell(0, j)]
            } else if i == g.nx {
                v[g.cell(g.nx - 1, j)]
            } else {
                mean.combine(v[g.cell(i - 1, j)], v[g.cell(i, j)])
            };
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            out.ycomp[g.yface(i, j)] = if j == 0 {
                v[g.cell(i, 0)]
            } else if j == g.ny {
                v[g.cell(i, g.ny - 1)]
            } else {
                mean.combine(v[g.cell(i, j - 1)], v[g.cell(i, j)])
            };
        }
    }
    Ok(out)
}

/// Average of the (up to four) cells touching each node.
pub fn node_mean(s: &[f64], g: &Grid) -> Vec<f64> {
    let mut out = vec![0.0; g.n_nodes()];
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let mut sum = 0.0;
            let mut n = 0.0;
            for (ci, cj) in [(i.wrapping_sub(1), j.wrapping_sub(1)), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j)] {
                if ci < g.nx && cj < g.ny {
                    sum += s[g.cell(ci, cj)];
                    n += 1.0;
                }
            }
            out[g.node(i, j)] = sum / n;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cells(g: &Grid, rng: &mut ChaCha8Rng, bc: ScalarBc) -> CellField {
        let v = (0..g.n_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        CellField::from_values(g, v, bc).unwrap()
    }

    fn random_faces(g: &Grid, rng: &mut ChaCha8Rng, zero_normal: bool) -> FaceField {
        let mut f = FaceField::zeros(g);
        f.xcomp.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        f.ycomp.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        if zero_normal {
            f.zero_normal_boundary();
        }
        f
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid::new(5, 3, 2.0, 1.0).unwrap();
        let s = CellField::constant(&g, 5.0, ScalarBc::NeumannZero);
        let gr = gradient(&s, &g).unwrap();
        assert_eq!(gr.max_abs(), 0.0);
        let s = CellField::constant(&g, 5.0, ScalarBc::Dirichlet(BoundaryTrace::constant(&g, 5.0)));
        assert!(gradient(&s, &g).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn gradient_of_linear_dirichlet_field() {
        let g = Grid::unit_square(4).unwrap();
        let trace = BoundaryTrace::from_fn(&g, |x, _| x);
        let s = CellField::from_fn(&g, ScalarBc::Dirichlet(trace), |x, _| x);
        let gr = gradient(&s, &g).unwrap();
        assert!(gr.xcomp.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(gr.ycomp.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn untagged_field_has_no_gradient() {
        let g = Grid::unit_square(3).unwrap();
        let s = CellField::zeros(&g, ScalarBc::None);
        assert!(matches!(gradient(&s, &g), Err(Error::MissingBoundaryCondition(_))));
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let g = Grid::unit_square(3).unwrap();
        let h = Grid::unit_square(4).unwrap();
        let s = CellField::zeros(&h, ScalarBc::NeumannZero);
        assert!(matches!(gradient(&s, &g), Err(Error::Dimension(_))));
        let f = FaceField::zeros(&h);
        assert!(matches!(divergence(&f, &g), Err(Error::Dimension(_))));
        let a = CellField::zeros(&g, ScalarBc::None);
        assert!(inner(&a, &s, &g).is_err());
    }

    #[test]
    fn constant_flux_has_zero_divergence() {
        let g = Grid::new(4, 6, 1.0, 3.0).unwrap();
        let f = FaceField::constant(&g, 2.5, -1.0);
        assert_eq!(divergence(&f, &g).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn five_point_stencil_annihilates_saddle() {
        let g = Grid::unit_square(6).unwrap();
        let s = CellField::from_fn(&g, ScalarBc::NeumannZero, |x, y| x * x - y * y);
        let lap = divergence(&gradient(&s, &g).unwrap(), &g).unwrap();
        // Direct summation of the stencil on interior cells.
        for j in 1..5 {
            for i in 1..5 {
                let direct = (s.at(i + 1, j) - 2.0 * s.at(i, j) + s.at(i - 1, j)) / (g.dx * g.dx)
                    + (s.at(i, j + 1) - 2.0 * s.at(i, j) + s.at(i, j - 1)) / (g.dy * g.dy);
                assert!(direct.abs() < 1e-12);
                assert!(lap.at(i, j).abs() < 1e-12, "cell ({i},{j}) = {}", lap.at(i, j));
            }
        }
    }

    #[test]
    fn inner_product_examples() {
        let g = Grid::unit_square(3).unwrap();
        let one = CellField::constant(&g, 1.0, ScalarBc::None);
        assert!((inner(&one, &one, &g).unwrap() - 1.0).abs() < 1e-15);
        let g = Grid::new(4, 2, 1.0, 0.5).unwrap();
        let a = CellField::constant(&g, 2.0, ScalarBc::None);
        let b = CellField::constant(&g, 3.0, ScalarBc::None);
        assert!((inner(&a, &b, &g).unwrap() - 3.0).abs() < 1e-14);
        let fa = FaceField::constant(&g, 1.0, 1.0);
        // Each component integrates to the domain area with half-weighted walls.
        assert!((inner(&fa, &fa, &g).unwrap() - 2.0 * 0.5).abs() < 1e-14);
    }

    #[test]
    fn cauchy_schwarz_holds() {
        let g = Grid::new(5, 4, 1.3, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = random_faces(&g, &mut rng, false);
            let b = random_faces(&g, &mut rng, false);
            let ab = inner(&a, &b, &g).unwrap();
            assert!(ab.abs() <= a.norm(&g).unwrap() * b.norm(&g).unwrap() * (1.0 + 1e-14));
        }
    }

    #[test]
    fn adjointness_for_both_boundary_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3, 4, 7, 16, 32] {
            let g = Grid::new(n, n + 1, 1.0, 1.5).unwrap();
            // Neumann-zero scalars against zero-normal-flux fields.
            let s = random_cells(&g, &mut rng, ScalarBc::NeumannZero);
            let f = random_faces(&g, &mut rng, true);
            let lhs = inner(&divergence(&f, &g).unwrap(), &s.clone().with_bc(ScalarBc::None), &g).unwrap()
                + inner(&f, &gradient(&s, &g).unwrap(), &g).unwrap();
            assert!(lhs.abs() < 1e-13, "neumann n={n}: {lhs}");
            // Dirichlet-zero scalars against arbitrary fields.
            let s = random_cells(&g, &mut rng, ScalarBc::Dirichlet(BoundaryTrace::zeros(&g)));
            let f = random_faces(&g, &mut rng, false);
            let lhs = inner(&divergence(&f, &g).unwrap(), &s.clone().with_bc(ScalarBc::None), &g).unwrap()
                + inner(&f, &gradient(&s, &g).unwrap(), &g).unwrap();
            assert!(lhs.abs() < 1e-13, "dirichlet n={n}: {lhs}");
        }
    }

    #[test]
    fn laplacian_rejects_nonpositive_coefficient() {
        let g = Grid::unit_square(3).unwrap();
        let mut c = FaceField::constant(&g, 1.0, 1.0);
        c.ycomp[2] = 0.0;
        let s = CellField::zeros(&g, ScalarBc::NeumannZero);
        assert!(matches!(weighted_laplacian(&c, &s, &g), Err(Error::CoefficientBound(_))));
    }

    #[test]
    fn laplacian_is_symmetric_and_nonpositive() {
        let g = Grid::new(6, 5, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..1000 {
            let mut c = random_faces(&g, &mut rng, false);
            c = c.map(|v| 1.5 + v);
            let bc = if trial % 2 == 0 {
                ScalarBc::NeumannZero
            } else {
                ScalarBc::Dirichlet(BoundaryTrace::zeros(&g))
            };
            let s = random_cells(&g, &mut rng, bc.clone());
            let t = random_cells(&g, &mut rng, bc);
            let ls = weighted_laplacian(&c, &s, &g).unwrap();
            let lt = weighted_laplacian(&c, &t, &g).unwrap();
            let a = inner(&ls, &t.clone().with_bc(ScalarBc::None), &g).unwrap();
            let b = inner(&s.clone().with_bc(ScalarBc::None), &lt, &g).unwrap();
            assert!((a - b).abs() < 1e-13 * (1.0 + a.abs()));
            assert!(inner(&ls, &s.clone().with_bc(ScalarBc::None), &g).unwrap() <= 1e-13);
        }
    }

    #[test]
    fn unit_laplacian_equals_div_grad() {
        let g = Grid::new(7, 4, 2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_cells(&g, &mut rng, ScalarBc::NeumannZero);
        let one = FaceField::constant(&g, 1.0, 1.0);
        let a = weighted_laplacian(&one, &s, &g).unwrap();
        let b = divergence(&gradient(&s, &g).unwrap(), &g).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn convective_term_trivial_cases() {
        let g = Grid::unit_square(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_cells(&g, &mut rng, ScalarBc::NeumannZero);
        let zero = FaceField::zeros(&g);
        assert_eq!(convective_term(&zero, &s, &g).unwrap().max_abs(), 0.0);
        let psi: Vec<f64> = (0..g.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let adv = super::super::curl_of_streamfunction(&psi, &g);
        let c = CellField::constant(&g, 3.0, ScalarBc::NeumannZero);
        assert!(convective_term(&adv, &c, &g).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn convective_term_is_skew_for_solenoidal_transport() {
        let g = Grid::unit_square(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let psi: Vec<f64> = (0..g.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let adv = super::super::curl_of_streamfunction(&psi, &g);
            let s = random_cells(&g, &mut rng, ScalarBc::NeumannZero);
            let t = convective_term(&adv, &s, &g).unwrap();
            let v = inner(&t, &s.clone().with_bc(ScalarBc::None), &g).unwrap();
            assert!(v.abs() <= 1e-13, "{v}");
        }
    }
}
