//! Linearized momentum balance for one outer sweep.
//!
//! With `sigma = (rho(phi) + rho^k) / 2` on faces and the mass flux
//! `M = rho^k u_lin + J`, the velocity solves
//!
//! ```text
//! (sigma u - rho^k u^k) / h + skew(M; u) - div(2 nu^k D u) + grad p
//!     = lambda0 a mu grad(phi^k) + Marangoni(phi, theta^k) + f_b(phi^k, theta^k)
//! ```
//!
//! Testing with `u` reproduces the kinetic-energy balance exactly: the mass
//! term telescopes `rho |u|^2 / 2` and the transport term is energy neutral.

use super::state::{FrozenCoefficients, State};
use crate::elliptic::{SolverConfig, StokesOperator, StokesSolution};
use crate::error::Result;
use crate::grid::{CellField, FaceField};
use crate::physics::PhysParams;

/// Assembled data of the momentum system.
#[derive(Debug, Clone)]
pub struct MomentumSystem {
    /// `sigma / h` on faces.
    pub mass: FaceField,
    /// `M = rho^k u_lin + J`.
    pub transport: FaceField,
    pub rhs: FaceField,
}

impl MomentumSystem {
    pub fn assemble(
        state_k: &State,
        frozen: &FrozenCoefficients,
        phi: &CellField,
        mu: &CellField,
        u_lin: &FaceField,
        params: &PhysParams,
        h: f64,
    ) -> Result<Self> {
        let g = &state_k.grid;
        let rho_new = params.density_faces(phi, g)?;
        let mut mass = rho_new.clone();
        mass.axpy(1.0, &frozen.rho_faces);
        mass.scale(0.5 / h);

        let mut transport = frozen.rho_faces.hadamard(u_lin);
        transport.axpy(1.0, &frozen.flux_j(mu, params, g)?);

        let mut rhs = frozen.rho_faces.hadamard(&state_k.u);
        rhs.scale(1.0 / h);
        rhs.axpy(1.0, &params.korteweg_force(mu, &state_k.phi, g)?);
        rhs.axpy(1.0, &params.marangoni_force(phi, &frozen.theta, g)?);
        rhs.axpy(1.0, &params.buoyancy_force(&state_k.phi, &frozen.theta, g)?);
        Ok(Self { mass, transport, rhs })
    }

    pub fn solve(&self, state_k: &State, frozen: &FrozenCoefficients, cfg: &SolverConfig) -> Result<StokesSolution> {
        let g = &state_k.grid;
        let transport = (self.transport.max_abs() > 0.0).then_some(&self.transport);
        let op = StokesOperator::new(g, Some(&self.mass), Some(&frozen.viscosity), transport)?;
        op.solve(&self.rhs, Some(&state_k.p), cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::harmonic_extension;
    use crate::grid::{divergence, gradient, BoundaryTrace, Grid, ScalarBc};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(g: &Grid, phi: f64, theta: f64) -> State {
        let t = BoundaryTrace::constant(g, theta);
        let tb = harmonic_extension(&t, g, &SolverConfig::default()).unwrap();
        State {
            grid: *g,
            u: FaceField::zeros(g),
            p: CellField::zeros(g, ScalarBc::NeumannZero),
            phi: CellField::constant(g, phi, ScalarBc::NeumannZero),
            mu: CellField::zeros(g, ScalarBc::NeumannZero),
            vartheta: CellField::zeros(g, ScalarBc::Dirichlet(BoundaryTrace::zeros(g))),
            theta_b: tb,
            step: 0,
            time: 0.0,
            h: 0.0,
        }
    }

    #[test]
    fn quiescent_state_stays_at_rest() {
        let g = Grid::unit_square(6).unwrap();
        let params = PhysParams::default();
        let s = state(&g, 0.2, 0.5);
        let fr = FrozenCoefficients::at(&s, &params).unwrap();
        let sys = MomentumSystem::assemble(&s, &fr, &s.phi, &s.mu, &s.u, &params, 0.01).unwrap();
        let sol = sys.solve(&s, &fr, &SolverConfig::default()).unwrap();
        assert_eq!(sol.u.max_abs(), 0.0);
        assert_eq!(sol.p.max_abs(), 0.0);
    }

    #[test]
    fn uniform_buoyancy_is_hydrostatic() {
        let g = Grid::unit_square(8).unwrap();
        let params = PhysParams {
            gravity: 9.81,
            alpha: 0.1,
            ..PhysParams::default()
        };
        let s = state(&g, 0.2, 0.5);
        let fr = FrozenCoefficients::at(&s, &params).unwrap();
        let sys = MomentumSystem::assemble(&s, &fr, &s.phi, &s.mu, &s.u, &params, 0.01).unwrap();
        let sol = sys.solve(&s, &fr, &SolverConfig::default().with_rel_tol(1e-12)).unwrap();
        assert!(sol.u.max_abs() < 1e-10, "u = {}", sol.u.max_abs());
        // p balances the constant body force: dp/dy = f_b.
        let fb = params.buoyancy(0.2, 0.5)[1];
        let gp = gradient(&sol.p, &g).unwrap();
        for j in 1..g.ny {
            for i in 0..g.nx {
                assert!((gp.ycomp[g.yface(i, j)] - fb).abs() < 1e-8);
            }
        }
        assert!(sol.p.mean().abs() < 1e-12);
    }

    #[test]
    fn matches_dense_saddle_point_solve() {
        let g = Grid::unit_square(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = PhysParams {
            rho1: 1.0,
            rho2: 3.0,
            ..PhysParams::default()
        };
        let mut s = state(&g, 0.0, 0.0);
        s.phi = CellField::from_fn(&g, ScalarBc::NeumannZero, |x, y| 0.4 * (3.0 * x).sin() * (2.0 * y).cos());
        s.mu = CellField::from_fn(&g, ScalarBc::NeumannZero, |x, y| (x - 0.3) * y);
        let fr = FrozenCoefficients::at(&s, &params).unwrap();
        let phi = s.phi.map(|v| 0.9 * v);
        let mut u_lin = FaceField::from_fns(&g, |x, y| x * (1.0 - x) * y, |x, y| -y * (1.0 - y) * x);
        u_lin.zero_normal_boundary();
        let h = 0.05;
        let mut sys = MomentumSystem::assemble(&s, &fr, &phi, &s.mu, &u_lin, &params, h).unwrap();
        for v in sys.rhs.xcomp.iter_mut().chain(sys.rhs.ycomp.iter_mut()) {
            *v += rng.gen_range(-1.0..1.0);
        }
        let sol = sys.solve(&s, &fr, &SolverConfig::default().with_rel_tol(1e-13)).unwrap();

        // Dense oracle from unit-vector probes on interior faces and cells.
        let transport = Some(&sys.transport);
        let op = StokesOperator::new(&g, Some(&sys.mass), Some(&fr.viscosity), transport).unwrap();
        let nxf = g.n_xfaces();
        let mut interior = vec![];
        for j in 0..g.ny {
            for i in 1..g.nx {
                interior.push(g.xface(i, j));
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                interior.push(nxf + g.yface(i, j));
            }
        }
        let nu = interior.len();
        let nc = g.n_cells();
        let n = nu + nc + 1;
        let mut a = DMatrix::<f64>::zeros(n, n);
        let nf = nxf + g.n_yfaces();
        for (c, &f) in interior.iter().enumerate() {
            let mut e = vec![0.0; nf];
            e[f] = 1.0;
            let mut y = vec![0.0; nf];
            op.apply_flat(&e, &mut y);
            for (r, &fr_) in interior.iter().enumerate() {
                a[(r, c)] = y[fr_];
            }
            let uf = FaceField::from_flat(&g, &e);
            let d = divergence(&uf, &g).unwrap();
            for k in 0..nc {
                a[(nu + k, c)] = -d.values[k];
            }
        }
        for k in 0..nc {
            let mut p = CellField::zeros(&g, ScalarBc::NeumannZero);
            p.values[k] = 1.0;
            let gp = gradient(&p, &g).unwrap().to_flat();
            for (r, &f) in interior.iter().enumerate() {
                a[(r, nu + k)] = gp[f];
            }
            a[(n - 1, nu + k)] = 1.0;
            a[(nu + k, n - 1)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        let rhs = sys.rhs.to_flat();
        for (r, &f) in interior.iter().enumerate() {
            b[r] = rhs[f];
        }
        let x = a.lu().solve(&b).unwrap();
        let uflat = sol.u.to_flat();
        for (r, &f) in interior.iter().enumerate() {
            assert!((uflat[f] - x[r]).abs() < 1e-8);
        }
        for k in 0..nc {
            assert!((sol.p.values[k] - x[nu + k]).abs() < 1e-8);
        }
    }
}
