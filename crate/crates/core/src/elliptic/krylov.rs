//! Conjugate gradients, BiCGStab and MINRES on flat `f64` arrays.
//!
//! Operators and preconditioners are closures `(x, y) -> y = Op x`. With
//! `project` set, every iterate and residual is kept orthogonal to constants,
//! which is how singular Neumann problems are solved on the zero-mean subspace.
//! All three methods confirm convergence against the true residual `b - A x`
//! and restart from it when the recurrence has drifted.

use super::{dot, norm2, project_mean, SolveReport, SolverConfig};
use crate::error::{Error, Result};

/// Optional preconditioner `z = M^{-1} r`.
pub type Precond<'a> = Option<&'a mut dyn FnMut(&[f64], &mut [f64])>;

const MAX_RESTARTS: usize = 8;

fn apply_precond(m: &mut Precond<'_>, r: &[f64], z: &mut [f64]) {
    match m {
        Some(f) => f(r, z),
        None => z.copy_from_slice(r),
    }
}

fn true_residual(
    apply: &mut impl FnMut(&[f64], &mut [f64]),
    rhs: &[f64],
    x: &[f64],
    r: &mut [f64],
    project: bool,
) -> f64 {
    apply(x, r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    if project {
        project_mean(r);
    }
    norm2(r)
}

fn rhs_norm(rhs: &[f64], project: bool) -> f64 {
    if project {
        let mut b = rhs.to_vec();
        project_mean(&mut b);
        norm2(&b)
    } else {
        norm2(rhs)
    }
}

fn finish(solver: &'static str, report: SolveReport) -> Result<SolveReport> {
    if report.converged {
        Ok(report)
    } else {
        Err(Error::NotConverged { solver, report })
    }
}

/// Preconditioned conjugate gradients for symmetric positive (semi)definite operators.
///
/// `x` holds the initial guess on entry and the solution on exit.
pub fn cg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: Precond<'_>,
    rhs: &[f64],
    x: &mut [f64],
    project: bool,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let n = rhs.len();
    let max_iter = cfg.max_iter_for(n);
    let target = cfg.target(rhs_norm(rhs, project));
    if project {
        project_mean(x);
    }
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut rn = true_residual(&mut apply, rhs, x, &mut r, project);
    let mut it = 0;
    let mut restarts = 0;
    'outer: while rn > target && it < max_iter && restarts <= MAX_RESTARTS {
        apply_precond(&mut precond, &r, &mut z);
        if project {
            project_mean(&mut z);
        }
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while it < max_iter {
            it += 1;
            apply(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) || !rz.is_finite() {
                break 'outer;
            }
            let alpha = rz / pq;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * q[k];
            }
            if project {
                project_mean(&mut r);
            }
            if norm2(&r) <= target {
                if project {
                    project_mean(x);
                }
                rn = true_residual(&mut apply, rhs, x, &mut r, project);
                restarts += 1;
                continue 'outer;
            }
            apply_precond(&mut precond, &r, &mut z);
            if project {
                project_mean(&mut z);
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        if project {
            project_mean(x);
        }
        rn = true_residual(&mut apply, rhs, x, &mut r, project);
    }
    if project {
        project_mean(x);
    }
    let rn = true_residual(&mut apply, rhs, x, &mut r, project);
    finish(
        "conjugate gradients",
        SolveReport {
            iterations: it,
            final_residual: rn,
            converged: rn <= target,
        },
    )
}

/// Unpreconditioned CG from a zero initial guess.
pub fn cg_solve(
    apply: impl FnMut(&[f64], &mut [f64]),
    rhs: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let mut x = vec![0.0; rhs.len()];
    let report = cg(apply, None, rhs, &mut x, false, cfg)?;
    Ok((x, report))
}

/// Right-preconditioned BiCGStab for general nonsingular operators.
pub fn bicgstab(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: Precond<'_>,
    rhs: &[f64],
    x: &mut [f64],
    project: bool,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let n = rhs.len();
    let max_iter = cfg.max_iter_for(n);
    let target = cfg.target(rhs_norm(rhs, project));
    if project {
        project_mean(x);
    }
    let mut r = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut rn = true_residual(&mut apply, rhs, x, &mut r, project);
    let mut it = 0;
    let mut restarts = 0;
    'outer: while rn > target && it < max_iter && restarts <= MAX_RESTARTS {
        restarts += 1;
        let rhat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        p.iter_mut().for_each(|e| *e = 0.0);
        while it < max_iter {
            it += 1;
            let rho_new = dot(&rhat, &r);
            if rho_new == 0.0 || !rho_new.is_finite() {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            for k in 0..n {
                p[k] = r[k] + beta * (p[k] - omega * v[k]);
            }
            apply_precond(&mut precond, &p, &mut ph);
            if project {
                project_mean(&mut ph);
            }
            apply(&ph, &mut v);
            if project {
                project_mean(&mut v);
            }
            let rv = dot(&rhat, &v);
            if rv == 0.0 || !rv.is_finite() {
                break;
            }
            alpha = rho_new / rv;
            for k in 0..n {
                s[k] = r[k] - alpha * v[k];
            }
            if norm2(&s) <= target {
                for k in 0..n {
                    x[k] += alpha * ph[k];
                }
                rn = true_residual(&mut apply, rhs, x, &mut r, project);
                continue 'outer;
            }
            apply_precond(&mut precond, &s, &mut sh);
            if project {
                project_mean(&mut sh);
            }
            apply(&sh, &mut t);
            if project {
                project_mean(&mut t);
            }
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for k in 0..n {
                x[k] += alpha * ph[k] + omega * sh[k];
                r[k] = s[k] - omega * t[k];
            }
            rho = rho_new;
            if norm2(&r) <= target {
                rn = true_residual(&mut apply, rhs, x, &mut r, project);
                continue 'outer;
            }
            if omega == 0.0 {
                break;
            }
        }
        rn = true_residual(&mut apply, rhs, x, &mut r, project);
    }
    if project {
        project_mean(x);
    }
    let rn = true_residual(&mut apply, rhs, x, &mut r, project);
    finish(
        "BiCGStab",
        SolveReport {
            iterations: it,
            final_residual: rn,
            converged: rn <= target,
        },
    )
}

/// Unpreconditioned BiCGStab from a zero initial guess.
pub fn bicgstab_solve(
    apply: impl FnMut(&[f64], &mut [f64]),
    rhs: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let mut x = vec![0.0; rhs.len()];
    let report = bicgstab(apply, None, rhs, &mut x, false, cfg)?;
    Ok((x, report))
}

/// Preconditioned MINRES for symmetric (possibly indefinite) operators;
/// the preconditioner must be symmetric positive definite.
pub fn minres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: Precond<'_>,
    rhs: &[f64],
    x: &mut [f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let n = rhs.len();
    let max_iter = cfg.max_iter_for(n);
    let target = cfg.target(norm2(rhs));
    let mut r = vec![0.0; n];
    let mut rn = true_residual(&mut apply, rhs, x, &mut r, false);
    let mut it = 0;
    let mut restarts = 0;
    let mut y = vec![0.0; n];
    let mut v = vec![0.0; n];
    while rn > target && it < max_iter && restarts <= MAX_RESTARTS {
        restarts += 1;
        let mut r1 = r.clone();
        apply_precond(&mut precond, &r1, &mut y);
        let beta1 = dot(&r1, &y);
        if !(beta1 > 0.0) {
            break;
        }
        let beta1 = beta1.sqrt();
        // Preconditioned residual norm relative to the Euclidean one, to translate the target.
        let scale = beta1 / rn;
        let mut r2 = r1.clone();
        let (mut oldb, mut beta, mut dbar, mut epsln, mut phibar) = (0.0, beta1, 0.0, 0.0, beta1);
        let (mut cs, mut sn) = (-1.0f64, 0.0f64);
        let mut w = vec![0.0; n];
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        let mut local = 0;
        while it < max_iter {
            it += 1;
            local += 1;
            let s = 1.0 / beta;
            for k in 0..n {
                v[k] = s * y[k];
            }
            apply(&v, &mut y);
            if local >= 2 {
                let c = beta / oldb;
                for k in 0..n {
                    y[k] -= c * r1[k];
                }
            }
            let alfa = dot(&v, &y);
            let c = alfa / beta;
            for k in 0..n {
                y[k] -= c * r2[k];
            }
            std::mem::swap(&mut r1, &mut r2);
            r2.copy_from_slice(&y);
            apply_precond(&mut precond, &r2, &mut y);
            oldb = beta;
            let bb = dot(&r2, &y);
            if bb < 0.0 || !bb.is_finite() {
                break;
            }
            beta = bb.sqrt();
            let oldeps = epsln;
            let delta = cs * dbar + sn * alfa;
            let gbar = sn * dbar - cs * alfa;
            epsln = sn * beta;
            dbar = -cs * beta;
            let gamma = gbar.hypot(beta).max(f64::EPSILON);
            cs = gbar / gamma;
            sn = beta / gamma;
            let phi = cs * phibar;
            phibar *= sn;
            std::mem::swap(&mut w1, &mut w2);
            std::mem::swap(&mut w2, &mut w);
            for k in 0..n {
                w[k] = (v[k] - oldeps * w1[k] - delta * w2[k]) / gamma;
                x[k] += phi * w[k];
            }
            if phibar <= 0.5 * target * scale || beta == 0.0 {
                break;
            }
        }
        rn = true_residual(&mut apply, rhs, x, &mut r, false);
    }
    finish(
        "MINRES",
        SolveReport {
            iterations: it,
            final_residual: rn,
            converged: rn <= target,
        },
    )
}
