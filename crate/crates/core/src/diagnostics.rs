//! Energies, the per-step discrete energy balance, monitors and the run ledger.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::elliptic::{stokes_inverse, weighted_neumann_inverse, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{
    convective_term, face_mean, gradient, gradient_norm_sq, inner, strain_norm_sq, viscous_operator, BoundaryTrace,
    CellField, FaceField, FaceMean, Grid, ScalarBc,
};
use crate::physics::PhysParams;
use crate::scheme::{FrozenCoefficients, Splitting, State};

/// The four parts of the total energy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `int rho(phi) |u|^2 / 2`.
    pub kinetic: f64,
    /// `lambda0 a |grad phi|^2 / 2`.
    pub gradient: f64,
    /// `lambda0 a int W(phi)`.
    pub potential: f64,
    /// `|vartheta|^2 / 2`.
    pub thermal: f64,
    pub total: f64,
}

fn neumann(s: &CellField) -> CellField {
    s.clone().with_bc(ScalarBc::NeumannZero)
}

fn dirichlet_zero(s: &CellField, g: &Grid) -> CellField {
    s.clone().with_bc(ScalarBc::Dirichlet(BoundaryTrace::zeros(g)))
}

fn norm_sq<F: crate::grid::GridField>(f: &F, g: &Grid) -> Result<f64> {
    inner(f, f, g)
}

/// Kinetic energy with density `rho(phi)` moved to faces.
pub fn kinetic_energy(phi: &CellField, u: &FaceField, params: &PhysParams, g: &Grid) -> Result<f64> {
    let rho = params.density_faces(phi, g)?;
    Ok(0.5 * inner(&rho.hadamard(u), u, g)?)
}

pub fn total_energy(state: &State, params: &PhysParams) -> Result<EnergyBreakdown> {
    let g = &state.grid;
    let kinetic = kinetic_energy(&state.phi, &state.u, params, g)?;
    let cap = params.capillary();
    let gradient = 0.5 * cap * norm_sq(&gradient(&neumann(&state.phi), g)?, g)?;
    let mut w = 0.0;
    for &v in &state.phi.values {
        w += params.potential.w_value(v)?;
    }
    let potential = cap * w * g.cell_area();
    let thermal = 0.5 * norm_sq(&state.vartheta, g)?;
    Ok(EnergyBreakdown {
        kinetic,
        gradient,
        potential,
        thermal,
        total: kinetic + gradient + potential + thermal,
    })
}

/// `(nu_min |grad u|^2 + lambda0 a m_min |grad mu|^2 + kappa_min |grad vartheta|^2) / 4`
/// with the declared lower bounds of the coefficients.
pub fn dissipation(state: &State, params: &PhysParams) -> Result<f64> {
    let g = &state.grid;
    let du = gradient_norm_sq(&state.u, g)?;
    let dmu = norm_sq(&gradient(&neumann(&state.mu), g)?, g)?;
    let dth = norm_sq(&gradient(&dirichlet_zero(&state.vartheta, g), g)?, g)?;
    Ok(0.25
        * (params.viscosity.lower_bound() * du
            + params.capillary() * params.mobility.lower_bound() * dmu
            + params.conductivity.lower_bound() * dth))
}

/// `|grad u| / |D u|`; bounded by `sqrt(2)` for no-slip fields.
pub fn korn_ratio(u: &FaceField, g: &Grid) -> Result<f64> {
    let s = strain_norm_sq(u, g)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok((gradient_norm_sq(u, g)? / s).sqrt())
}

/// The terms of the discrete energy balance of one step, each already multiplied by `h`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IdentityTerms {
    pub energy_change: f64,
    /// Squared increments produced by the backward differences.
    pub numerical_dissipation: f64,
    /// `h` times viscous, diffusive and thermal dissipation with the actual coefficients.
    pub dissipation: f64,
    /// `lambda0 a` times the convexity remainder of the potential.
    pub potential_remainder: f64,
    /// `h` times Marangoni, buoyancy and wall-temperature work.
    pub work: f64,
    /// `max(1, |E^k|)`.
    pub scale: f64,
}

impl IdentityTerms {
    pub fn residual(&self) -> f64 {
        (self.energy_change + self.numerical_dissipation + self.dissipation + self.potential_remainder - self.work)
            .abs()
            / self.scale
    }
}

/// Evaluates every term of the energy balance between two consecutive states.
pub fn identity_terms(state_k: &State, state_k1: &State, params: &PhysParams, splitting: Splitting) -> Result<IdentityTerms> {
    let g = &state_k.grid;
    if state_k1.grid != *g {
        return Err(Error::Dimension("states live on different grids".into()));
    }
    let h = state_k1.h;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step size of the new state must be positive, got {h}")));
    }
    let e0 = total_energy(state_k, params)?;
    let e1 = total_energy(state_k1, params)?;
    let frozen = FrozenCoefficients::at(state_k, params)?;
    let cap = params.capillary();

    let mut du = state_k1.u.clone();
    du.axpy(-1.0, &state_k.u);
    let dphi = state_k1.phi.zip_map(&state_k.phi, |a, b| a - b).with_bc(ScalarBc::NeumannZero);
    let dth = state_k1.vartheta.zip_map(&state_k.vartheta, |a, b| a - b);
    let nd = 0.5 * inner(&frozen.rho_faces.hadamard(&du), &du, g)?
        + 0.5 * cap * norm_sq(&gradient(&dphi, g)?, g)?
        + 0.5 * norm_sq(&dth, g)?;

    let u = &state_k1.u;
    let visc = inner(&viscous_operator(&frozen.viscosity, u, g)?, u, g)?;
    let gmu = gradient(&neumann(&state_k1.mu), g)?;
    let diff = inner(&frozen.mobility.hadamard(&gmu), &gmu, g)?;
    let vt = dirichlet_zero(&state_k1.vartheta, g);
    let gvt = gradient(&vt, g)?;
    let cond = inner(&frozen.conductivity.hadamard(&gvt), &gvt, g)?;
    let diss = h * (visc + cap * diff + cond);

    let pot = &params.potential;
    let mut rem = 0.0;
    for (&p1, &p0) in state_k1.phi.values.iter().zip(&state_k.phi.values) {
        let explicit = match splitting {
            Splitting::Symmetric => pot.c_w * (p1 + p0),
            Splitting::ConvexSplit => 2.0 * pot.c_w * p0,
        };
        rem += (pot.f_prime(p1)? - explicit) * (p1 - p0) - (pot.w_value(p1)? - pot.w_value(p0)?);
    }
    let rem = cap * rem * g.cell_area();

    let mut force = params.marangoni_force(&state_k1.phi, &frozen.theta, g)?;
    force.axpy(1.0, &params.buoyancy_force(&state_k.phi, &frozen.theta, g)?);
    let mech = inner(&force, u, g)?;
    let conv_b = convective_term(u, &state_k1.theta_b, g)?;
    let gb = gradient(&state_k1.theta_b, g)?;
    let therm = -inner(&conv_b, &state_k1.vartheta, g)? - inner(&frozen.conductivity.hadamard(&gb), &gvt, g)?;
    let work = h * (mech + therm);

    Ok(IdentityTerms {
        energy_change: e1.total - e0.total,
        numerical_dissipation: nd,
        dissipation: diss,
        potential_remainder: rem,
        work,
        scale: e0.total.abs().max(1.0),
    })
}

/// Normalized residual of the discrete energy balance; zero for an exact discrete solution.
pub fn energy_identity_residual(
    state_k: &State,
    state_k1: &State,
    params: &PhysParams,
    splitting: Splitting,
) -> Result<f64> {
    Ok(identity_terms(state_k, state_k1, params, splitting)?.residual())
}

/// The continuous-dependence distance between two states: `|grad S^{-1} u_d|^2`
/// plus the mobility-weighted negative norm of `phi_d` plus `|theta_d|^2`.
pub fn uniqueness_distance(s1: &State, s2: &State, params: &PhysParams, cfg: &SolverConfig) -> Result<f64> {
    let g = &s1.grid;
    if s2.grid != *g {
        return Err(Error::Dimension("states live on different grids".into()));
    }
    if params.mobility.depends_on_theta() {
        return Err(Error::InvalidParameter(
            "distance is undefined for temperature-dependent mobility".into(),
        ));
    }
    let (m1, m2) = (s1.phi.mean(), s2.phi.mean());
    if (m1 - m2).abs() > 1e-10 {
        return Err(Error::Compatibility(format!(
            "phase-field means differ by {:e}",
            (m1 - m2).abs()
        )));
    }
    let mut ud = s1.u.clone();
    ud.axpy(-1.0, &s2.u);
    let w = stokes_inverse(&ud, g, cfg)?;
    let tu = gradient_norm_sq(&w, g)?;

    let mut pd = s1.phi.zip_map(&s2.phi, |a, b| a - b).with_bc(ScalarBc::None);
    pd.remove_mean();
    let tp = if pd.max_abs() == 0.0 {
        0.0
    } else {
        let z = weighted_neumann_inverse(&s1.phi, &params.mobility, &pd, g, cfg)?;
        inner(&pd, &z, g)?
    };
    let td = s1.theta().zip_map(&s2.theta(), |a, b| a - b).with_bc(ScalarBc::None);
    let tt = norm_sq(&td, g)?;
    Ok(tu + tp + tt)
}

/// Mean of the phase field.
pub fn mass(phi: &CellField) -> f64 {
    phi.mean()
}

/// Minimum and maximum of `theta = vartheta + Theta_b` over cells.
pub fn theta_extrema(state: &State) -> (f64, f64) {
    let t = state.theta();
    (t.min(), t.max())
}

/// `max |phi|`.
pub fn phi_range(phi: &CellField) -> f64 {
    phi.max_abs()
}

/// Arithmetic face interpolation of a cell field, exposed for output.
pub fn to_faces(s: &CellField, g: &Grid) -> Result<FaceField> {
    face_mean(s, g, FaceMean::Arithmetic)
}

/// One line of the run ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: usize,
    pub time: f64,
    pub h: f64,
    pub energy: EnergyBreakdown,
    pub dissipation: f64,
    pub mass: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub phi_max_abs: f64,
    pub identity_residual: f64,
    pub outer_iters: usize,
    pub newton_iters: usize,
    /// Twin-run distance, when tracked.
    pub distance: Option<f64>,
}

impl LedgerRow {
    /// Row for `state`; step-dependent counters are left at zero.
    pub fn of(state: &State, params: &PhysParams) -> Result<Self> {
        let (theta_min, theta_max) = theta_extrema(state);
        Ok(Self {
            step: state.step,
            time: state.time,
            h: state.h,
            energy: total_energy(state, params)?,
            dissipation: dissipation(state, params)?,
            mass: mass(&state.phi),
            theta_min,
            theta_max,
            phi_max_abs: phi_range(&state.phi),
            identity_residual: 0.0,
            outer_iters: 0,
            newton_iters: 0,
            distance: None,
        })
    }
}

/// Column order of the ledger CSV.
pub const LEDGER_COLUMNS: [&str; 16] = [
    "step",
    "time",
    "h",
    "kinetic",
    "gradient",
    "potential",
    "thermal",
    "total",
    "dissipation",
    "mass",
    "theta_min",
    "theta_max",
    "phi_max_abs",
    "identity_residual",
    "outer_iters",
    "newton_iters",
];

/// Time series of ledger rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub rows: Vec<LedgerRow>,
}

impl RunLedger {
    /// Appends a row; rows must advance in time.
    pub fn push(&mut self, row: LedgerRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.time > last.time) {
                return Err(Error::InvalidParameter(format!(
                    "ledger rows must advance in time ({} after {})",
                    row.time, last.time
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }

    /// Writes the CSV with 17 significant digits; a `distance` column is added when any row carries one.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let with_distance = self.rows.iter().any(|r| r.distance.is_some());
        let mut header = LEDGER_COLUMNS.join(",");
        if with_distance {
            header.push_str(",distance");
        }
        writeln!(w, "{header}")?;
        for r in &self.rows {
            let e = &r.energy;
            write!(w, "{}", r.step)?;
            for v in [
                r.time,
                r.h,
                e.kinetic,
                e.gradient,
                e.potential,
                e.thermal,
                e.total,
                r.dissipation,
                r.mass,
                r.theta_min,
                r.theta_max,
                r.phi_max_abs,
                r.identity_residual,
            ] {
                write!(w, ",{v:.16e}")?;
            }
            write!(w, ",{},{}", r.outer_iters, r.newton_iters)?;
            if with_distance {
                write!(w, ",{:.16e}", r.distance.unwrap_or(f64::NAN))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ledger is ASCII")
    }
}
