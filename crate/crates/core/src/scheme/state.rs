use crate::error::{Error, Result};
use crate::grid::{gradient, BoundaryTrace, CellField, FaceField, Grid, ScalarBc};
use crate::physics::PhysParams;

/// The discrete unknowns at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub grid: Grid,
    /// No-slip velocity.
    pub u: FaceField,
    /// Zero-mean pressure.
    pub p: CellField,
    pub phi: CellField,
    pub mu: CellField,
    /// Temperature minus the harmonic extension; zero on the walls.
    pub vartheta: CellField,
    /// Harmonic extension of the wall temperature (time independent).
    pub theta_b: CellField,
    pub step: usize,
    pub time: f64,
    /// Size of the step that produced this state (0 for the initial state).
    pub h: f64,
}

impl State {
    pub fn trace(&self) -> &BoundaryTrace {
        match &self.theta_b.bc {
            ScalarBc::Dirichlet(t) => t,
            _ => unreachable!("theta_b always carries its wall trace"),
        }
    }

    /// `theta = vartheta + Theta_b`, tagged with the wall trace.
    pub fn theta(&self) -> CellField {
        self.vartheta
            .zip_map(&self.theta_b, |a, b| a + b)
            .with_bc(self.theta_b.bc.clone())
    }

    pub fn check(&self) -> Result<()> {
        let g = &self.grid;
        self.u.check(g)?;
        self.p.check(g)?;
        self.phi.check(g)?;
        self.mu.check(g)?;
        self.vartheta.check(g)?;
        self.theta_b.check(g)?;
        if !matches!(self.theta_b.bc, ScalarBc::Dirichlet(_)) {
            return Err(Error::MissingBoundaryCondition("harmonic extension"));
        }
        let finite = self.u.is_finite()
            && self.p.is_finite()
            && self.phi.is_finite()
            && self.mu.is_finite()
            && self.vartheta.is_finite();
        if !finite {
            return Err(Error::Invariant {
                name: "finite",
                detail: "state contains non-finite values".into(),
            });
        }
        if self.phi.max_abs() >= 1.0 {
            return Err(Error::Invariant {
                name: "phase-field bound",
                detail: format!("max|phi| = {} is not below 1", self.phi.max_abs()),
            });
        }
        Ok(())
    }
}

/// Coefficients frozen at the previous time level.
#[derive(Debug, Clone)]
pub struct FrozenCoefficients {
    /// Density at level k on faces.
    pub rho_faces: FaceField,
    pub viscosity: CellField,
    pub mobility: FaceField,
    pub conductivity: FaceField,
    pub theta: CellField,
}

impl FrozenCoefficients {
    pub fn at(state: &State, params: &PhysParams) -> Result<Self> {
        let g = &state.grid;
        let theta = state.theta();
        let rho_faces = params.density_faces(&state.phi, g)?;
        let viscosity = params.viscosity.eval_cells(&state.phi, &theta);
        let mobility = params.mobility.eval_faces(&state.phi, &theta, g, params.face_mean)?;
        let conductivity = params.conductivity.eval_faces(&state.phi, &theta, g, params.face_mean)?;
        Ok(Self {
            rho_faces,
            viscosity,
            mobility,
            conductivity,
            theta,
        })
    }

    /// The relative flux `J` for a chemical potential `mu`.
    pub fn flux_j(&self, mu: &CellField, params: &PhysParams, g: &Grid) -> Result<FaceField> {
        if params.rho1 == params.rho2 {
            mu.check(g)?;
            return Ok(FaceField::zeros(g));
        }
        let gmu = gradient(&mu.clone().with_bc(ScalarBc::NeumannZero), g)?;
        params.flux_j(&self.mobility, &gmu)
    }
}
