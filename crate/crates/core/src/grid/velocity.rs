//! Operators acting on face-centred velocity fields.
//!
//! The four velocity-gradient components live where they are naturally
//! centred: the normal strains `du/dx`, `dv/dy` at cell centres and the
//! shear derivatives `du/dy`, `dv/dx` at nodes. Tangential no-slip enters
//! through the wall-node shear, taken one-sided over half a cell. Every
//! operator on velocities is assembled as the transpose of this gradient
//! against a pairing, so the resulting matrices are symmetric by construction.

use super::{face_mean, CellField, FaceField, FaceMean, Grid};
use crate::error::Result;

/// Discrete velocity gradient of a no-slip field.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGradient {
    /// `du/dx` per cell.
    pub exx: Vec<f64>,
    /// `dv/dy` per cell.
    pub eyy: Vec<f64>,
    /// `du/dy` per node.
    pub dudy: Vec<f64>,
    /// `dv/dx` per node.
    pub dvdx: Vec<f64>,
}

impl VelocityGradient {
    pub fn zeros(g: &Grid) -> Self {
        Self {
            exx: vec![0.0; g.n_cells()],
            eyy: vec![0.0; g.n_cells()],
            dudy: vec![0.0; g.n_nodes()],
            dvdx: vec![0.0; g.n_nodes()],
        }
    }

    pub fn of(u: &FaceField, g: &Grid) -> Result<Self> {
        u.check(g)?;
        let mut out = Self::zeros(g);
        out.compute(g, &u.xcomp, &u.ycomp);
        Ok(out)
    }

    /// Wall-normal entries of `ux`/`uy` are read as zero.
    pub(crate) fn compute(&mut self, g: &Grid, ux: &[f64], uy: &[f64]) {
        let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
        let uxv = |i: usize, j: usize| if i == 0 || i == nx { 0.0 } else { ux[g.xface(i, j)] };
        let uyv = |i: usize, j: usize| if j == 0 || j == ny { 0.0 } else { uy[g.yface(i, j)] };
        for j in 0..ny {
            for i in 0..nx {
                let c = g.cell(i, j);
                self.exx[c] = (uxv(i + 1, j) - uxv(i, j)) / dx;
                self.eyy[c] = (uyv(i, j + 1) - uyv(i, j)) / dy;
            }
        }
        for j in 0..=ny {
            for i in 0..=nx {
                let n = g.node(i, j);
                self.dudy[n] = if i == 0 || i == nx {
                    0.0
                } else if j == 0 {
                    2.0 * uxv(i, 0) / dy
                } else if j == ny {
                    -2.0 * uxv(i, ny - 1) / dy
                } else {
                    (uxv(i, j) - uxv(i, j - 1)) / dy
                };
                self.dvdx[n] = if j == 0 || j == ny {
                    0.0
                } else if i == 0 {
                    2.0 * uyv(0, j) / dx
                } else if i == nx {
                    -2.0 * uyv(nx - 1, j) / dx
                } else {
                    (uyv(i, j) - uyv(i - 1, j)) / dx
                };
            }
        }
    }
}

/// Coefficients of a linear functional on velocity gradients,
/// `L(v) = sum_c A (sxx exx(v) + syy eyy(v)) + sum_n w_n (sxy dudy(v) + syx dvdx(v))`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressPairing {
    pub sxx: Vec<f64>,
    pub syy: Vec<f64>,
    pub sxy: Vec<f64>,
    pub syx: Vec<f64>,
}

impl StressPairing {
    pub fn zeros(g: &Grid) -> Self {
        Self {
            sxx: vec![0.0; g.n_cells()],
            syy: vec![0.0; g.n_cells()],
            sxy: vec![0.0; g.n_nodes()],
            syx: vec![0.0; g.n_nodes()],
        }
    }

    /// Evaluates `L(v)` for a precomputed gradient.
    pub fn pair(&self, grad: &VelocityGradient, g: &Grid) -> f64 {
        let a = g.cell_area();
        let mut s = 0.0;
        for c in 0..g.n_cells() {
            s += a * (self.sxx[c] * grad.exx[c] + self.syy[c] * grad.eyy[c]);
        }
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let n = g.node(i, j);
                s += g.node_weight(i, j) * (self.sxy[n] * grad.dudy[n] + self.syx[n] * grad.dvdx[n]);
            }
        }
        s
    }

    /// The face field `F` with `<F, v> = L(v)` for every no-slip `v`; wall-normal entries are 0.
    pub fn to_force(&self, g: &Grid) -> FaceField {
        let mut out = FaceField::zeros(g);
        self.transpose_into(g, &mut out.xcomp, &mut out.ycomp);
        out
    }

    pub(crate) fn transpose_into(&self, g: &Grid, fx: &mut [f64], fy: &mut [f64]) {
        let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
        let a = g.cell_area();
        // Node weight times derivative coefficient, divided by the face weight `a`.
        let wn = |i: usize, j: usize| g.node_weight(i, j) / a;
        for j in 0..ny {
            fx[g.xface(0, j)] = 0.0;
            fx[g.xface(nx, j)] = 0.0;
            for i in 1..nx {
                let mut f = (self.sxx[g.cell(i - 1, j)] - self.sxx[g.cell(i, j)]) / dx;
                let lo = if j == 0 { 2.0 } else { 1.0 };
                f += wn(i, j) * lo / dy * self.sxy[g.node(i, j)];
                let hi = if j + 1 == ny { 2.0 } else { 1.0 };
                f -= wn(i, j + 1) * hi / dy * self.sxy[g.node(i, j + 1)];
                fx[g.xface(i, j)] = f;
            }
        }
        for i in 0..nx {
            fy[g.yface(i, 0)] = 0.0;
            fy[g.yface(i, ny)] = 0.0;
        }
        for j in 1..ny {
            for i in 0..nx {
                let mut f = (self.syy[g.cell(i, j - 1)] - self.syy[g.cell(i, j)]) / dy;
                let lo = if i == 0 { 2.0 } else { 1.0 };
                f += wn(i, j) * lo / dx * self.syx[g.node(i, j)];
                let hi = if i + 1 == nx { 2.0 } else { 1.0 };
                f -= wn(i + 1, j) * hi / dx * self.syx[g.node(i + 1, j)];
                fy[g.yface(i, j)] = f;
            }
        }
    }
}

/// Viscosity sampled at cells and at nodes (node value = mean of touching cells).
#[derive(Debug, Clone)]
pub(crate) struct ViscosityField {
    pub cell: Vec<f64>,
    pub node: Vec<f64>,
}

impl ViscosityField {
    pub fn new(nu: &[f64], g: &Grid) -> Self {
        Self {
            cell: nu.to_vec(),
            node: super::node_mean(nu, g),
        }
    }

    pub fn min(&self) -> f64 {
        self.cell.iter().chain(&self.node).copied().fold(f64::INFINITY, f64::min)
    }
}

/// `-div(2 nu D u)` on flat face arrays, using `scratch` for the gradient and pairing.
#[allow(clippy::too_many_arguments)]
pub(crate) fn viscous_into(
    g: &Grid,
    nu: &ViscosityField,
    ux: &[f64],
    uy: &[f64],
    grad: &mut VelocityGradient,
    pairing: &mut StressPairing,
    out_x: &mut [f64],
    out_y: &mut [f64],
) {
    grad.compute(g, ux, uy);
    for c in 0..g.n_cells() {
        pairing.sxx[c] = 2.0 * nu.cell[c] * grad.exx[c];
        pairing.syy[c] = 2.0 * nu.cell[c] * grad.eyy[c];
    }
    for n in 0..g.n_nodes() {
        let s = nu.node[n] * (grad.dudy[n] + grad.dvdx[n]);
        pairing.sxy[n] = s;
        pairing.syx[n] = s;
    }
    pairing.transpose_into(g, out_x, out_y);
}

/// `-Delta u` (componentwise, no-slip) on flat face arrays.
pub(crate) fn stokes_laplacian_into(
    g: &Grid,
    ux: &[f64],
    uy: &[f64],
    grad: &mut VelocityGradient,
    pairing: &mut StressPairing,
    out_x: &mut [f64],
    out_y: &mut [f64],
) {
    grad.compute(g, ux, uy);
    pairing.sxx.copy_from_slice(&grad.exx);
    pairing.syy.copy_from_slice(&grad.eyy);
    pairing.sxy.copy_from_slice(&grad.dudy);
    pairing.syx.copy_from_slice(&grad.dvdx);
    pairing.transpose_into(g, out_x, out_y);
}

/// The operator `u -> -div(2 nu D u)` for cell viscosity `nu`.
///
/// `<viscous_operator(nu, u), v> = (2 nu Du, Dv)` for all no-slip `u`, `v`.
pub fn viscous_operator(nu: &CellField, u: &FaceField, g: &Grid) -> Result<FaceField> {
    nu.check(g)?;
    u.check(g)?;
    let visc = ViscosityField::new(&nu.values, g);
    let mut grad = VelocityGradient::zeros(g);
    let mut pairing = StressPairing::zeros(g);
    let mut out = FaceField::zeros(g);
    viscous_into(g, &visc, &u.xcomp, &u.ycomp, &mut grad, &mut pairing, &mut out.xcomp, &mut out.ycomp);
    Ok(out)
}

/// Componentwise Laplacian `Delta u` with no-slip walls (negative semidefinite).
pub fn vector_laplacian(u: &FaceField, g: &Grid) -> Result<FaceField> {
    u.check(g)?;
    let mut grad = VelocityGradient::zeros(g);
    let mut pairing = StressPairing::zeros(g);
    let mut out = FaceField::zeros(g);
    stokes_laplacian_into(g, &u.xcomp, &u.ycomp, &mut grad, &mut pairing, &mut out.xcomp, &mut out.ycomp);
    out.scale(-1.0);
    Ok(out)
}

/// `||grad u||^2` over all four gradient components.
pub fn gradient_norm_sq(u: &FaceField, g: &Grid) -> Result<f64> {
    let gr = VelocityGradient::of(u, g)?;
    let pairing = StressPairing {
        sxx: gr.exx.clone(),
        syy: gr.eyy.clone(),
        sxy: gr.dudy.clone(),
        syx: gr.dvdx.clone(),
    };
    Ok(pairing.pair(&gr, g))
}

/// `||D u||^2` with `D u` the symmetric part of the gradient.
pub fn strain_norm_sq(u: &FaceField, g: &Grid) -> Result<f64> {
    let gr = VelocityGradient::of(u, g)?;
    let mut pairing = StressPairing {
        sxx: gr.exx.clone(),
        syy: gr.eyy.clone(),
        sxy: vec![0.0; g.n_nodes()],
        syx: vec![0.0; g.n_nodes()],
    };
    for n in 0..g.n_nodes() {
        let s = 0.5 * (gr.dudy[n] + gr.dvdx[n]);
        pairing.sxy[n] = s;
        pairing.syx[n] = s;
    }
    Ok(pairing.pair(&gr, g))
}

/// `div(M u) - (div M) u / 2` on velocity control volumes, for mass flux `m`.
///
/// Centred conservative fluxes minus half the control-volume mass balance;
/// wall fluxes are zero. `<skew_transport(m, u), u> = 0` for any no-slip `u`.
pub(crate) fn skew_transport_into(
    g: &Grid,
    m: &FaceField,
    ux: &[f64],
    uy: &[f64],
    out_x: &mut [f64],
    out_y: &mut [f64],
) {
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
    let uxv = |i: usize, j: usize| if i == 0 || i == nx { 0.0 } else { ux[g.xface(i, j)] };
    let uyv = |i: usize, j: usize| if j == 0 || j == ny { 0.0 } else { uy[g.yface(i, j)] };
    let mx = |i: usize, j: usize| m.xcomp[g.xface(i, j)];
    let my = |i: usize, j: usize| m.ycomp[g.yface(i, j)];
    for j in 0..ny {
        out_x[g.xface(0, j)] = 0.0;
        out_x[g.xface(nx, j)] = 0.0;
        for i in 1..nx {
            let u0 = uxv(i, j);
            let fe = 0.5 * (mx(i, j) + mx(i + 1, j));
            let fw = 0.5 * (mx(i - 1, j) + mx(i, j));
            let gn = if j + 1 == ny { 0.0 } else { 0.5 * (my(i - 1, j + 1) + my(i, j + 1)) };
            let gs = if j == 0 { 0.0 } else { 0.5 * (my(i - 1, j) + my(i, j)) };
            let ue = 0.5 * (u0 + uxv(i + 1, j));
            let uw = 0.5 * (u0 + uxv(i - 1, j));
            let un = if j + 1 == ny { 0.0 } else { 0.5 * (u0 + uxv(i, j + 1)) };
            let us = if j == 0 { 0.0 } else { 0.5 * (u0 + uxv(i, j - 1)) };
            let conv = (fe * ue - fw * uw) / dx + (gn * un - gs * us) / dy;
            let bal = (fe - fw) / dx + (gn - gs) / dy;
            out_x[g.xface(i, j)] = conv - 0.5 * bal * u0;
        }
    }
    for i in 0..nx {
        out_y[g.yface(i, 0)] = 0.0;
        out_y[g.yface(i, ny)] = 0.0;
    }
    for j in 1..ny {
        for i in 0..nx {
            let u0 = uyv(i, j);
            let gn = 0.5 * (my(i, j) + my(i, j + 1));
            let gs = 0.5 * (my(i, j - 1) + my(i, j));
            let fe = if i + 1 == nx { 0.0 } else { 0.5 * (mx(i + 1, j - 1) + mx(i + 1, j)) };
            let fw = if i == 0 { 0.0 } else { 0.5 * (mx(i, j - 1) + mx(i, j)) };
            let un = 0.5 * (u0 + uyv(i, j + 1));
            let us = 0.5 * (u0 + uyv(i, j - 1));
            let ue = if i + 1 == nx { 0.0 } else { 0.5 * (u0 + uyv(i + 1, j)) };
            let uw = if i == 0 { 0.0 } else { 0.5 * (u0 + uyv(i - 1, j)) };
            let conv = (fe * ue - fw * uw) / dx + (gn * un - gs * us) / dy;
            let bal = (fe - fw) / dx + (gn - gs) / dy;
            out_y[g.yface(i, j)] = conv - 0.5 * bal * u0;
        }
    }
}

/// Skew-symmetric transport of `u` by the mass flux `m`.
pub fn skew_transport(m: &FaceField, u: &FaceField, g: &Grid) -> Result<FaceField> {
    m.check(g)?;
    u.check(g)?;
    let mut out = FaceField::zeros(g);
    skew_transport_into(g, m, &u.xcomp, &u.ycomp, &mut out.xcomp, &mut out.ycomp);
    Ok(out)
}

/// Skew-symmetrized `div(rho_k adv (x) u)`, with `rho_k` moved to faces by arithmetic means.
pub fn momentum_convection(rho_k: &CellField, adv: &FaceField, u: &FaceField, g: &Grid) -> Result<FaceField> {
    rho_k.check(g)?;
    let rho_f = face_mean(rho_k, g, FaceMean::Arithmetic)?;
    adv.check(g)?;
    skew_transport(&rho_f.hadamard(adv), u, g)
}

/// Discrete curl of a node streamfunction; boundary node values are read as 0,
/// so the result is exactly divergence-free with zero wall-normal components.
pub fn curl_of_streamfunction(psi: &[f64], g: &Grid) -> FaceField {
    let (nx, ny) = (g.nx, g.ny);
    let p = |i: usize, j: usize| {
        if i == 0 || j == 0 || i == nx || j == ny {
            0.0
        } else {
            psi[g.node(i, j)]
        }
    };
    let mut out = FaceField::zeros(g);
    for j in 0..ny {
        for i in 0..=nx {
            out.xcomp[g.xface(i, j)] = (p(i, j + 1) - p(i, j)) / g.dy;
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            out.ycomp[g.yface(i, j)] = -(p(i + 1, j) - p(i, j)) / g.dx;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{divergence, inner, ScalarBc};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_noslip(g: &Grid, rng: &mut ChaCha8Rng) -> FaceField {
        let mut f = FaceField::zeros(g);
        f.xcomp.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        f.ycomp.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        f.zero_normal_boundary();
        f
    }

    fn random_solenoidal(g: &Grid, rng: &mut ChaCha8Rng) -> FaceField {
        let psi: Vec<f64> = (0..g.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        curl_of_streamfunction(&psi, g)
    }

    #[test]
    fn curl_is_solenoidal() {
        let g = Grid::new(6, 5, 1.2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_solenoidal(&g, &mut rng);
        assert!(divergence(&u, &g).unwrap().max_abs() < 1e-13);
        assert_eq!(u.max_abs_normal_boundary(), 0.0);
    }

    #[test]
    fn viscous_operator_is_symmetric_and_matches_strain_energy() {
        let g = Grid::new(5, 4, 1.0, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let nu = CellField::from_values(
            &g,
            (0..g.n_cells()).map(|_| rng.gen_range(0.5..2.0)).collect(),
            ScalarBc::None,
        )
        .unwrap();
        for _ in 0..20 {
            let u = random_noslip(&g, &mut rng);
            let v = random_noslip(&g, &mut rng);
            let au = viscous_operator(&nu, &u, &g).unwrap();
            let av = viscous_operator(&nu, &v, &g).unwrap();
            let a = inner(&au, &v, &g).unwrap();
            let b = inner(&u, &av, &g).unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            let one = CellField::constant(&g, 1.0, ScalarBc::None);
            let e = inner(&viscous_operator(&one, &u, &g).unwrap(), &u, &g).unwrap();
            assert!((e - 2.0 * strain_norm_sq(&u, &g).unwrap()).abs() < 1e-11 * e);
        }
    }

    #[test]
    fn korn_identity_holds_discretely() {
        let g = Grid::new(6, 7, 1.0, 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let u = random_noslip(&g, &mut rng);
            let div = divergence(&u, &g).unwrap();
            let d2 = inner(&div, &div, &g).unwrap();
            let lhs = 2.0 * strain_norm_sq(&u, &g).unwrap() - gradient_norm_sq(&u, &g).unwrap();
            assert!((lhs - d2).abs() < 1e-10 * (1.0 + d2), "{lhs} vs {d2}");
        }
    }

    #[test]
    fn vector_laplacian_energy() {
        let g = Grid::unit_square(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_noslip(&g, &mut rng);
        let e = -inner(&vector_laplacian(&u, &g).unwrap(), &u, &g).unwrap();
        assert!((e - gradient_norm_sq(&u, &g).unwrap()).abs() < 1e-11 * e);
    }

    #[test]
    fn momentum_convection_is_energy_neutral() {
        let g = Grid::unit_square(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let adv = random_solenoidal(&g, &mut rng);
            let u = random_noslip(&g, &mut rng);
            let rho = CellField::from_values(
                &g,
                (0..g.n_cells()).map(|_| rng.gen_range(0.5..3.0)).collect(),
                ScalarBc::None,
            )
            .unwrap();
            let c = momentum_convection(&rho, &adv, &u, &g).unwrap();
            assert!(inner(&c, &u, &g).unwrap().abs() < 1e-13);
            // Arbitrary (non-solenoidal) mass flux as well.
            let m = random_noslip(&g, &mut rng);
            let s = skew_transport(&m, &u, &g).unwrap();
            assert!(inner(&s, &u, &g).unwrap().abs() < 1e-13);
        }
        let zero = FaceField::zeros(&g);
        let adv = random_solenoidal(&g, &mut rng);
        let rho = CellField::constant(&g, 1.0, ScalarBc::None);
        assert_eq!(momentum_convection(&rho, &adv, &zero, &g).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn pairing_transpose_matches_functional() {
        let g = Grid::new(4, 5, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut p = StressPairing::zeros(&g);
        for v in p.sxx.iter_mut().chain(p.syy.iter_mut()).chain(p.sxy.iter_mut()).chain(p.syx.iter_mut()) {
            *v = rng.gen_range(-1.0..1.0);
        }
        let f = p.to_force(&g);
        for _ in 0..5 {
            let v = random_noslip(&g, &mut rng);
            let l = p.pair(&VelocityGradient::of(&v, &g).unwrap(), &g);
            assert!((inner(&f, &v, &g).unwrap() - l).abs() < 1e-13);
        }
    }
}
