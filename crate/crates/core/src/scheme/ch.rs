//! Damped Newton solve of the phase-field subproblem.
//!
//! Unknowns are `(phi, mu)` in cells. With `L_m = -div(m grad .)` (zero flux)
//! and `conv = div(u phi^k)` the residuals are
//!
//! ```text
//! h R1 = phi - phi^k + h conv + h L_m mu
//! R2   = mu + c_W (phi + phi^k) + Delta phi - F'(phi)      (symmetric split)
//! R2   = mu + 2 c_W phi^k + Delta phi - F'(phi)            (convex split)
//! ```
//!
//! Each Newton correction solves the symmetric indefinite system
//! `[[B, -I], [-I, -h L_m]] [dphi; dmu] = [R2; h R1]` with MINRES, where
//! `B = F''(phi) - c_W - Delta` (or `F'' - Delta`) is positive definite.
//! The correction is applied in `psi = atanh(phi)`, where the logarithmic
//! barrier is smooth, and damped so that no cell covers more than a fixed
//! fraction of its distance to `+-1`. Convergence is declared at the
//! tolerance or at the rounding level of the residual, whichever is larger.

use super::Splitting;
use crate::elliptic::{minres, project_mean, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{convect_into, div_c_grad_into, CellField, Closure, FaceField, Grid, ScalarBc};
use crate::physics::Potential;

/// Output of one phase-field solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ChSolution {
    pub phi: CellField,
    pub mu: CellField,
    pub newton_iters: usize,
    pub linear_iters: usize,
    /// `max(|h R1|_inf, |R2|_inf)` at the returned pair.
    pub residual: f64,
}

/// Tolerances and damping for the Newton iteration.
#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to `+-1` a single step may cover.
    pub damping_fraction: f64,
    pub splitting: Splitting,
    pub linear: SolverConfig,
}

/// The frozen data of a phase-field step.
pub struct ChProblem<'a> {
    grid: &'a Grid,
    h: f64,
    phi_k: &'a [f64],
    /// `h * div(u phi^k)`.
    h_conv: Vec<f64>,
    mobility: &'a FaceField,
    potential: &'a Potential,
    ones: FaceField,
    diag_lap: Vec<f64>,
    diag_mob: Vec<f64>,
}

fn neumann_diag(g: &Grid, c: &FaceField) -> Vec<f64> {
    let mut d = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let mut s = 0.0;
            if i > 0 {
                s += c.xcomp[g.xface(i, j)] / (g.dx * g.dx);
            }
            if i + 1 < g.nx {
                s += c.xcomp[g.xface(i + 1, j)] / (g.dx * g.dx);
            }
            if j > 0 {
                s += c.ycomp[g.yface(i, j)] / (g.dy * g.dy);
            }
            if j + 1 < g.ny {
                s += c.ycomp[g.yface(i, j + 1)] / (g.dy * g.dy);
            }
            d[g.cell(i, j)] = s;
        }
    }
    d
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl<'a> ChProblem<'a> {
    pub fn new(
        grid: &'a Grid,
        h: f64,
        phi_k: &'a CellField,
        u: &FaceField,
        mobility: &'a FaceField,
        potential: &'a Potential,
    ) -> Result<Self> {
        let g = grid;
        phi_k.check(g)?;
        u.check(g)?;
        mobility.check(g)?;
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {h}")));
        }
        if !(mobility.min() > 0.0) {
            return Err(Error::CoefficientBound(format!(
                "mobility must be positive, minimum is {}",
                mobility.min()
            )));
        }
        let mut h_conv = vec![0.0; g.n_cells()];
        convect_into(g, u, &phi_k.values, &mut h_conv);
        h_conv.iter_mut().for_each(|v| *v *= h);
        let ones = FaceField::constant(g, 1.0, 1.0);
        Ok(Self {
            grid,
            h,
            phi_k: &phi_k.values,
            h_conv,
            diag_lap: neumann_diag(g, &ones),
            diag_mob: neumann_diag(g, mobility),
            mobility,
            potential,
            ones,
        })
    }

    /// `(h R1, R2)` at `(phi, mu)`.
    pub fn residuals(&self, phi: &[f64], mu: &[f64], split: Splitting) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.grid;
        let n = g.n_cells();
        let c_w = self.potential.c_w;
        let mut lap_mu = vec![0.0; n];
        div_c_grad_into(g, self.mobility, mu, Closure::Neumann, &mut lap_mu);
        let mut lap_phi = vec![0.0; n];
        div_c_grad_into(g, &self.ones, phi, Closure::Neumann, &mut lap_phi);
        let mut r1 = vec![0.0; n];
        let mut r2 = vec![0.0; n];
        for k in 0..n {
            r1[k] = phi[k] - self.phi_k[k] + self.h_conv[k] - self.h * lap_mu[k];
            let explicit = match split {
                Splitting::Symmetric => c_w * (phi[k] + self.phi_k[k]),
                Splitting::ConvexSplit => 2.0 * c_w * self.phi_k[k],
            };
            r2[k] = mu[k] + explicit + lap_phi[k] - self.potential.f_prime(phi[k])?;
        }
        Ok((r1, r2))
    }

    /// Size of the rounding error in evaluating the residuals at `(phi, mu)`.
    ///
    /// Near `+-1` the term `F'(phi)` amplifies the unit roundoff of `phi` by
    /// `F''(phi)`, so residuals below this level carry no information.
    fn roundoff_floor(&self, phi: &[f64], mu: &[f64]) -> Result<f64> {
        let g = self.grid;
        let c_w = self.potential.c_w;
        let lap = 2.0 / (g.dx * g.dx) + 2.0 / (g.dy * g.dy);
        let mob = self.diag_mob.iter().fold(0.0_f64, |m, v| m.max(*v));
        let mut r1 = 0.0_f64;
        let mut r2 = 0.0_f64;
        for k in 0..phi.len() {
            let (p, q) = (phi[k].abs(), self.phi_k[k].abs());
            r1 = r1.max(p + q + self.h_conv[k].abs() + 2.0 * self.h * mob * mu[k].abs());
            r2 = r2.max(
                self.potential.f_second(phi[k])? * p
                    + self.potential.f_prime(phi[k])?.abs()
                    + mu[k].abs()
                    + c_w * (p + q)
                    + 2.0 * lap * p,
            );
        }
        Ok(4.0 * f64::EPSILON * r1.max(r2))
    }

    fn merit(&self, phi: &[f64], mu: &[f64], split: Splitting) -> Result<f64> {
        let (r1, r2) = self.residuals(phi, mu, split)?;
        Ok(inf_norm(&r1).max(inf_norm(&r2)))
    }

    /// Newton iteration from the initial guess `(phi0, mu0)`; `phi0` must lie strictly inside `(-1, 1)`.
    pub fn solve(&self, phi0: &CellField, mu0: &CellField, cfg: &NewtonConfig) -> Result<ChSolution> {
        let g = self.grid;
        phi0.check(g)?;
        mu0.check(g)?;
        if phi0.max_abs() >= 1.0 {
            return Err(Error::PotentialDomain { value: phi0.max_abs() });
        }
        let n = g.n_cells();
        let target_mean = self.phi_k.iter().sum::<f64>() / n as f64;
        let mut phi = phi0.values.clone();
        let mut mu = mu0.values.clone();
        let split = cfg.splitting;
        let c_shift = match split {
            Splitting::Symmetric => self.potential.c_w,
            Splitting::ConvexSplit => 0.0,
        };
        let mut linear_iters = 0;
        let mut res = self.merit(&phi, &mu, split)?;
        let mut tol = cfg.tol.max(self.roundoff_floor(&phi, &mu)?);
        let mut it = 0;
        while res > tol {
            if it == cfg.max_iter {
                return Err(Error::Newton {
                    iterations: it,
                    residual: res,
                });
            }
            it += 1;
            let (r1, r2) = self.residuals(&phi, &mu, split)?;
            let mut dpot = vec![0.0; n];
            for k in 0..n {
                dpot[k] = self.potential.f_second(phi[k])? - c_shift;
            }
            let d_b: Vec<f64> = (0..n).map(|k| dpot[k] + self.diag_lap[k]).collect();
            let d_s: Vec<f64> = (0..n).map(|k| self.h * self.diag_mob[k] + 1.0 / d_b[k]).collect();
            let mut rhs = r2.clone();
            rhs.extend_from_slice(&r1);
            let mut scratch = vec![0.0; n];
            let apply = |x: &[f64], y: &mut [f64]| {
                let (xp, xm) = x.split_at(n);
                let (yp, ym) = y.split_at_mut(n);
                div_c_grad_into(g, &self.ones, xp, Closure::Neumann, &mut scratch);
                for k in 0..n {
                    yp[k] = dpot[k] * xp[k] - scratch[k] - xm[k];
                }
                div_c_grad_into(g, self.mobility, xm, Closure::Neumann, &mut scratch);
                for k in 0..n {
                    ym[k] = -xp[k] + self.h * scratch[k];
                }
            };
            let mut pre = |r: &[f64], z: &mut [f64]| {
                for k in 0..n {
                    z[k] = r[k] / d_b[k];
                    z[n + k] = r[n + k] / d_s[k];
                }
            };
            let mut dx = vec![0.0; 2 * n];
            let report = minres(apply, Some(&mut pre), &rhs, &mut dx, &cfg.linear)?;
            linear_iters += report.iterations;
            let (dphi, dmu) = dx.split_at_mut(n);
            project_mean(dphi);

            // Update in psi = atanh(phi), where the barrier is smooth; dpsi = dphi / (1 - phi^2).
            let psi: Vec<f64> = phi.iter().map(|p| p.atanh()).collect();
            let dpsi: Vec<f64> = (0..n).map(|k| dphi[k] / ((1.0 - phi[k]) * (1.0 + phi[k]))).collect();
            let mut alpha: f64 = 1.0;
            for k in 0..n {
                if dpsi[k] == 0.0 {
                    continue;
                }
                let cap = psi_cap(psi[k], cfg.damping_fraction);
                let toward = if dpsi[k] * psi[k] >= 0.0 { cap - psi[k].abs() } else { cap + psi[k].abs() };
                alpha = alpha.min(toward.max(0.0) / dpsi[k].abs());
            }
            let mut trial_phi = vec![0.0; n];
            let mut trial_mu = vec![0.0; n];
            let mut accepted = None;
            for _ in 0..40 {
                let mut inside = true;
                for k in 0..n {
                    trial_phi[k] = (psi[k] + alpha * dpsi[k]).tanh();
                    trial_mu[k] = mu[k] + alpha * dmu[k];
                    inside &= trial_phi[k].abs() < 1.0;
                }
                if inside {
                    restore_mean(&mut trial_phi, target_mean);
                    let r = self.merit(&trial_phi, &trial_mu, split)?;
                    if r <= tol || r < (1.0 - 1e-4 * alpha) * res {
                        accepted = Some(r);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some(r) => {
                    phi.copy_from_slice(&trial_phi);
                    mu.copy_from_slice(&trial_mu);
                    res = r;
                    tol = cfg.tol.max(self.roundoff_floor(&phi, &mu)?);
                }
                None => {
                    return Err(Error::Newton {
                        iterations: it,
                        residual: res,
                    })
                }
            }
        }
        Ok(ChSolution {
            phi: CellField::from_values(g, phi, ScalarBc::NeumannZero)?,
            mu: CellField::from_values(g, mu, ScalarBc::NeumannZero)?,
            newton_iters: it,
            linear_iters,
            residual: res,
        })
    }
}

/// Largest `|psi|` a cell may reach from `psi` in one step: the distance of
/// `tanh(psi)` to the nearer of `+-1` shrinks by at most the damping fraction.
fn psi_cap(psi: f64, fraction: f64) -> f64 {
    // 1 - tanh|psi| = 2 / (exp(2|psi|) + 1)
    let dist = (1.0 - fraction) * 2.0 / ((2.0 * psi.abs()).exp() + 1.0);
    0.5 * ((2.0 - dist) / dist).ln()
}

/// Shifts `v` so that its mean is `target`, keeping every entry inside `(-1, 1)`.
fn restore_mean(v: &mut [f64], target: f64) {
    let n = v.len() as f64;
    let d = target - v.iter().sum::<f64>() / n;
    if d != 0.0 && v.iter().all(|x| (x + d).abs() < 1.0) {
        v.iter_mut().for_each(|x| *x += d);
    }
}
