//! Saddle-point solves for the linearized momentum balance.
//!
//! The velocity block is `A u = m u + skew(M; u) - div(2 nu D u)` (mass,
//! skew-symmetric transport, viscous stress), or the unit vector Laplacian
//! for the Stokes inverse. Pressure is found from the Schur complement
//! `S = -D A^{-1} G` on zero-mean cell fields, preconditioned with
//! `nu I + m (-Delta_N)^{-1}`; each Schur application is an inner Krylov
//! solve with `A`.

use std::cell::RefCell;

use super::{bicgstab, cg, neumann::JacobiLaplacian, norm2, project_mean, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{
    divergence_into, gradient_into, skew_transport_into, stokes_laplacian_into, viscous_into, CellField,
    Closure, FaceField, Grid, ScalarBc, StressPairing, VelocityGradient, ViscosityField,
};

struct Scratch {
    grad: VelocityGradient,
    pairing: StressPairing,
    tmp: Vec<f64>,
}

/// Velocity block of the linearized momentum system on a fixed grid.
pub struct StokesOperator<'a> {
    grid: &'a Grid,
    mass: Option<Vec<f64>>,
    viscosity: Option<ViscosityField>,
    transport: Option<FaceField>,
    inv_diag: Vec<f64>,
    nu_mean: f64,
    mass_mean: f64,
    scratch: RefCell<Scratch>,
}

/// Velocity, pressure and the Schur-iteration report of a saddle-point solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesSolution {
    pub u: FaceField,
    pub p: CellField,
    pub report: SolveReport,
    /// Total inner velocity iterations.
    pub inner_iterations: usize,
}

impl<'a> StokesOperator<'a> {
    /// `mass` is the face coefficient of the zeroth-order term (e.g. `rho / h`);
    /// `nu = None` selects the unit vector Laplacian; `transport` is the mass flux
    /// of the skew convection term.
    pub fn new(
        grid: &'a Grid,
        mass: Option<&FaceField>,
        nu: Option<&CellField>,
        transport: Option<&FaceField>,
    ) -> Result<Self> {
        let g = grid;
        if let Some(m) = mass {
            m.check(g)?;
            if !m.is_finite() || m.min() < 0.0 {
                return Err(Error::CoefficientBound("mass coefficient must be nonnegative".into()));
            }
        }
        if let Some(t) = transport {
            t.check(g)?;
        }
        let viscosity = match nu {
            Some(nu) => {
                nu.check(g)?;
                let v = ViscosityField::new(&nu.values, g);
                if !(v.min() > 0.0) {
                    return Err(Error::CoefficientBound(format!(
                        "viscosity must be positive, minimum is {}",
                        v.min()
                    )));
                }
                Some(v)
            }
            None => None,
        };
        let nu_mean = viscosity
            .as_ref()
            .map_or(1.0, |v| v.cell.iter().sum::<f64>() / v.cell.len() as f64);
        let mass_flat = mass.map(|m| m.to_flat());
        let mass_mean = mass_flat.as_ref().map_or(0.0, |m| {
            let mut s = 0.0;
            let mut n = 0.0;
            interior_faces(g, |k| {
                s += m[k];
                n += 1.0;
            });
            s / n
        });
        let mut op = Self {
            grid,
            mass: mass_flat,
            viscosity,
            transport: transport.cloned(),
            inv_diag: Vec::new(),
            nu_mean,
            mass_mean,
            scratch: RefCell::new(Scratch {
                grad: VelocityGradient::zeros(g),
                pairing: StressPairing::zeros(g),
                tmp: vec![0.0; g.n_xfaces() + g.n_yfaces()],
            }),
        };
        op.inv_diag = op.probe_diagonal();
        Ok(op)
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn is_symmetric(&self) -> bool {
        self.transport.is_none()
    }

    fn n_faces(&self) -> usize {
        self.grid.n_xfaces() + self.grid.n_yfaces()
    }

    /// `y = A x` on flat `[xcomp, ycomp]` arrays; wall-normal entries are ignored and returned as 0.
    pub fn apply_flat(&self, x: &[f64], y: &mut [f64]) {
        self.apply_parts(x, y, true);
    }

    fn apply_parts(&self, x: &[f64], y: &mut [f64], with_transport: bool) {
        let g = self.grid;
        let nxf = g.n_xfaces();
        let (xx, xy) = x.split_at(nxf);
        let mut s = self.scratch.borrow_mut();
        let Scratch { grad, pairing, tmp } = &mut *s;
        {
            let (yx, yy) = y.split_at_mut(nxf);
            match &self.viscosity {
                Some(v) => viscous_into(g, v, xx, xy, grad, pairing, yx, yy),
                None => stokes_laplacian_into(g, xx, xy, grad, pairing, yx, yy),
            }
        }
        if let (true, Some(t)) = (with_transport, &self.transport) {
            let (tx, ty) = tmp.split_at_mut(nxf);
            skew_transport_into(g, t, xx, xy, tx, ty);
            for (a, b) in y.iter_mut().zip(tmp.iter()) {
                *a += b;
            }
        }
        if let Some(m) = &self.mass {
            interior_faces(g, |k| y[k] += m[k] * x[k]);
        }
    }

    /// Velocity block applied to a face field.
    pub fn apply(&self, u: &FaceField) -> Result<FaceField> {
        u.check(self.grid)?;
        let x = u.to_flat();
        let mut y = vec![0.0; x.len()];
        self.apply_flat(&x, &mut y);
        Ok(FaceField::from_flat(self.grid, &y))
    }

    /// Diagonal of the symmetric part by coloured probing (stencil reach is one face).
    fn probe_diagonal(&self) -> Vec<f64> {
        let g = self.grid;
        let n = self.n_faces();
        let nxf = g.n_xfaces();
        let mut diag = vec![0.0; n];
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        for comp in 0..2 {
            for ci in 0..3 {
                for cj in 0..3 {
                    e.iter_mut().for_each(|v| *v = 0.0);
                    let mut members = Vec::new();
                    if comp == 0 {
                        for j in (cj..g.ny).step_by(3) {
                            for i in (ci..=g.nx).step_by(3) {
                                members.push(g.xface(i, j));
                            }
                        }
                    } else {
                        for j in (cj..=g.ny).step_by(3) {
                            for i in (ci..g.nx).step_by(3) {
                                members.push(nxf + g.yface(i, j));
                            }
                        }
                    }
                    for &k in &members {
                        e[k] = 1.0;
                    }
                    self.apply_parts(&e, &mut y, false);
                    for &k in &members {
                        diag[k] = y[k];
                    }
                }
            }
        }
        diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect()
    }

    /// Solves `A u = f` from the initial guess in `u` (flat layout).
    pub fn solve_velocity(&self, f: &[f64], u: &mut [f64], cfg: &SolverConfig) -> Result<SolveReport> {
        let inv = &self.inv_diag;
        let mut pre = |r: &[f64], z: &mut [f64]| {
            for k in 0..r.len() {
                z[k] = r[k] * inv[k];
            }
        };
        let mut rhs = f.to_vec();
        zero_walls(self.grid, &mut rhs);
        zero_walls(self.grid, u);
        if self.is_symmetric() {
            cg(|x, y| self.apply_flat(x, y), Some(&mut pre), &rhs, u, false, cfg)
        } else {
            bicgstab(|x, y| self.apply_flat(x, y), Some(&mut pre), &rhs, u, false, cfg)
        }
    }

    /// Velocity and zero-mean pressure with `A u + grad p = f`, `div u = 0`, no-slip walls.
    /// `p0` warm-starts the pressure iteration.
    pub fn solve(&self, f: &FaceField, p0: Option<&CellField>, cfg: &SolverConfig) -> Result<StokesSolution> {
        let g = self.grid;
        f.check(g)?;
        if !f.is_finite() {
            return Err(Error::InvalidParameter("momentum right-hand side is not finite".into()));
        }
        let nc = g.n_cells();
        let nf = self.n_faces();
        let nxf = g.n_xfaces();
        let inner_cfg = SolverConfig {
            rel_tol: (cfg.rel_tol * 1e-2).max(1e-13),
            abs_tol: cfg.abs_tol * 1e-3,
            max_iter: cfg.max_iter,
        };
        let inner_iters = RefCell::new(0usize);
        let inner_err: RefCell<Option<Error>> = RefCell::new(None);
        let fflat = f.to_flat();

        let solve_a = |rhs: &[f64], out: &mut [f64]| {
            out.iter_mut().for_each(|v| *v = 0.0);
            match self.solve_velocity(rhs, out, &inner_cfg) {
                Ok(r) => *inner_iters.borrow_mut() += r.iterations,
                Err(e) => {
                    inner_err.borrow_mut().get_or_insert(e);
                }
            }
        };

        // b = -D A^{-1} f
        let mut w = vec![0.0; nf];
        solve_a(&fflat, &mut w);
        let mut b = vec![0.0; nc];
        divergence_into(g, &w[..nxf], &w[nxf..], &mut b);
        b.iter_mut().for_each(|v| *v = -*v);
        project_mean(&mut b);

        let tmp_f = RefCell::new((vec![0.0; nf], vec![0.0; nf]));
        let schur = |p: &[f64], y: &mut [f64]| {
            let mut t = tmp_f.borrow_mut();
            let (gp, sol) = &mut *t;
            let (gx, gy) = gp.split_at_mut(nxf);
            gradient_into(g, p, Closure::Neumann, gx, gy);
            solve_a(gp, sol);
            divergence_into(g, &sol[..nxf], &sol[nxf..], y);
            y.iter_mut().for_each(|v| *v = -*v);
        };

        let one = FaceField::constant(g, 1.0, 1.0);
        let lap = JacobiLaplacian::new(g, &one);
        let lap_cfg = SolverConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_iter: None,
        };
        let (nu_m, mass_m) = (self.nu_mean, self.mass_mean);
        let mut pre = |r: &[f64], z: &mut [f64]| {
            if mass_m > 0.0 {
                let mut rr = r.to_vec();
                project_mean(&mut rr);
                z.iter_mut().for_each(|v| *v = 0.0);
                // An inexact application only slows the outer iteration, which
                // checks its own true residual, so stagnation here is not an error.
                if lap.solve(&rr, z, &lap_cfg).is_err() && !z.iter().all(|v| v.is_finite()) {
                    z.iter_mut().for_each(|v| *v = 0.0);
                }
                for k in 0..r.len() {
                    z[k] = nu_m * rr[k] + mass_m * z[k];
                }
            } else {
                for k in 0..r.len() {
                    z[k] = nu_m * r[k];
                }
            }
        };

        // The Schur operator is applied through inexact velocity solves, so its
        // residual cannot drop below the inner accuracy times the divergence
        // scale |A^{-1} f| / dx; the absolute floor is measured on that scale.
        let div_scale = norm2(&w) / g.dx.min(g.dy);
        let schur_cfg = SolverConfig {
            abs_tol: cfg.abs_tol.max(cfg.rel_tol * div_scale),
            ..*cfg
        };
        let mut p = match p0 {
            Some(p0) => {
                p0.check(g)?;
                p0.values.clone()
            }
            None => vec![0.0; nc],
        };
        let schur_result = if self.is_symmetric() {
            cg(schur, Some(&mut pre), &b, &mut p, true, &schur_cfg)
        } else {
            bicgstab(schur, Some(&mut pre), &b, &mut p, true, &schur_cfg)
        };
        if let Some(e) = inner_err.borrow_mut().take() {
            return Err(e);
        }
        let report = schur_result.map_err(|e| match e {
            Error::NotConverged { report, .. } => Error::NotConverged {
                solver: "Stokes pressure Schur iteration",
                report,
            },
            other => other,
        })?;

        // u = A^{-1}(f - G p)
        let mut rhs = fflat;
        let mut gp = vec![0.0; nf];
        {
            let (gx, gy) = gp.split_at_mut(nxf);
            gradient_into(g, &p, Closure::Neumann, gx, gy);
        }
        for (r, q) in rhs.iter_mut().zip(&gp) {
            *r -= q;
        }
        let mut u = vec![0.0; nf];
        solve_a(&rhs, &mut u);
        if let Some(e) = inner_err.borrow_mut().take() {
            return Err(e);
        }
        let inner_iterations = *inner_iters.borrow();
        Ok(StokesSolution {
            u: FaceField::from_flat(g, &u),
            p: CellField::from_values(g, p, ScalarBc::NeumannZero)?,
            report,
            inner_iterations,
        })
    }
}

fn interior_faces(g: &Grid, mut f: impl FnMut(usize)) {
    let nxf = g.n_xfaces();
    for j in 0..g.ny {
        for i in 1..g.nx {
            f(g.xface(i, j));
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            f(nxf + g.yface(i, j));
        }
    }
}

fn zero_walls(g: &Grid, v: &mut [f64]) {
    let nxf = g.n_xfaces();
    for j in 0..g.ny {
        v[g.xface(0, j)] = 0.0;
        v[g.xface(g.nx, j)] = 0.0;
    }
    for i in 0..g.nx {
        v[nxf + g.yface(i, 0)] = 0.0;
        v[nxf + g.yface(i, g.ny)] = 0.0;
    }
}

/// Solves the linearized momentum system
/// `mass u + skew(transport; u) - div(2 nu D u) + grad p = rhs`, `div u = 0`.
pub fn stokes_solve(
    mass: &FaceField,
    nu: &CellField,
    transport: Option<&FaceField>,
    rhs: &FaceField,
    g: &Grid,
    cfg: &SolverConfig,
) -> Result<StokesSolution> {
    StokesOperator::new(g, Some(mass), Some(nu), transport)?.solve(rhs, None, cfg)
}

/// The velocity `w` of the unit Stokes problem `-Delta w + grad pi = f`, `div w = 0`, no-slip.
pub fn stokes_inverse(f: &FaceField, g: &Grid, cfg: &SolverConfig) -> Result<FaceField> {
    Ok(StokesOperator::new(g, None, None, None)?.solve(f, None, cfg)?.u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{curl_of_streamfunction, divergence, gradient, vector_laplacian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rhs() {
        let g = Grid::unit_square(6).unwrap();
        let mass = FaceField::constant(&g, 10.0, 10.0);
        let nu = CellField::constant(&g, 1.0, ScalarBc::None);
        let s = stokes_solve(&mass, &nu, None, &FaceField::zeros(&g), &g, &SolverConfig::default()).unwrap();
        assert_eq!(s.u.max_abs(), 0.0);
        assert_eq!(s.p.max_abs(), 0.0);
    }

    #[test]
    fn gradient_forcing_is_absorbed_by_pressure() {
        let g = Grid::unit_square(8).unwrap();
        let mass = FaceField::constant(&g, 4.0, 4.0);
        let nu = CellField::constant(&g, 0.5, ScalarBc::None);
        let p_lin = CellField::from_fn(&g, ScalarBc::NeumannZero, |_, y| -3.0 * y);
        let f = gradient(&p_lin, &g).unwrap();
        let s = stokes_solve(&mass, &nu, None, &f, &g, &SolverConfig::default()).unwrap();
        assert!(s.u.max_abs() < 1e-9, "{}", s.u.max_abs());
        let mut expect = p_lin.clone();
        expect.remove_mean();
        for (a, b) in s.p.values.iter().zip(&expect.values) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn stokes_inverse_round_trip() {
        let g = Grid::unit_square(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let psi: Vec<f64> = (0..g.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = curl_of_streamfunction(&psi, &g);
        let mut f = vector_laplacian(&w, &g).unwrap();
        f.scale(-1.0);
        let back = stokes_inverse(&f, &g, &SolverConfig::default()).unwrap();
        for (a, b) in back.to_flat().iter().zip(w.to_flat()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn solution_is_divergence_free_with_transport() {
        let g = Grid::unit_square(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let psi: Vec<f64> = (0..g.n_nodes()).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let adv = curl_of_streamfunction(&psi, &g);
        let mass = FaceField::constant(&g, 20.0, 20.0);
        let nu = CellField::from_values(
            &g,
            (0..g.n_cells()).map(|_| rng.gen_range(0.5..1.5)).collect(),
            ScalarBc::None,
        )
        .unwrap();
        let mut f = FaceField::zeros(&g);
        f.xcomp.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        f.ycomp.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let op = StokesOperator::new(&g, Some(&mass), Some(&nu), Some(&adv)).unwrap();
        let s = op.solve(&f, None, &SolverConfig::default()).unwrap();
        assert!(divergence(&s.u, &g).unwrap().max_abs() < 1e-8);
        assert!(s.p.mean().abs() < 1e-12);
        let mut r = op.apply(&s.u).unwrap();
        r.axpy(1.0, &gradient(&s.p.clone().with_bc(ScalarBc::NeumannZero), &g).unwrap());
        r.axpy(-1.0, &f);
        r.zero_normal_boundary();
        assert!(r.max_abs() < 1e-8, "{}", r.max_abs());
    }

    #[test]
    fn smooth_pressure_load_converges() {
        // A smooth pressure-dominated load with a tiny solenoidal part, as
        // produced by capillary forces near equilibrium: the Schur residual
        // is then small compared with the velocity scale.
        let g = Grid::new(48, 48, 24.0, 24.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let q = CellField::from_fn(&g, ScalarBc::NeumannZero, |x, y| {
            (std::f64::consts::PI * x / 24.0).cos() + 0.5 * (std::f64::consts::PI * y / 24.0).cos()
        });
        let f0 = gradient(&q, &g).unwrap();
        let psi: Vec<f64> = (0..g.n_nodes()).map(|_| rng.gen_range(-1e-9..1e-9)).collect();
        let mass = FaceField::constant(&g, 5.0, 5.0);
        let nu = CellField::constant(&g, 1.0, ScalarBc::None);
        let adv = curl_of_streamfunction(&psi.iter().map(|v| v * 1e8).collect::<Vec<_>>(), &g);
        for scale in [1.0, 10.0, 100.0] {
            let mut f = f0.clone();
            f.scale(scale);
            f.axpy(1.0, &curl_of_streamfunction(&psi, &g));
            for transport in [None, Some(&adv)] {
                let op = StokesOperator::new(&g, Some(&mass), Some(&nu), transport).unwrap();
                let s = op.solve(&f, None, &SolverConfig::default()).unwrap();
                assert!(s.u.max_abs() < 1e-8, "{}", s.u.max_abs());
            }
        }
    }
}
