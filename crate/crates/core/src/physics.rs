//! Constitutive laws, the Flory–Huggins potential and the capillary forces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    face_mean, gradient, node_mean, CellField, FaceField, FaceMean, Grid, ScalarBc, StressPairing,
};

/// Transport coefficient as a function of `(phi, theta)`, with an analytic lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientModel {
    Constant { value: f64 },
    /// `base + curvature * phi^2`.
    QuadraticPhi { base: f64, curvature: f64 },
    /// `lo + (hi - lo) / (1 + beta_phi phi^2 + beta_theta theta^2)`.
    BoundedRational {
        lo: f64,
        hi: f64,
        beta_phi: f64,
        beta_theta: f64,
    },
}

impl CoefficientModel {
    pub fn constant(value: f64) -> Self {
        CoefficientModel::Constant { value }
    }

    #[inline]
    pub fn eval(&self, phi: f64, theta: f64) -> f64 {
        match *self {
            CoefficientModel::Constant { value } => value,
            CoefficientModel::QuadraticPhi { base, curvature } => base + curvature * phi * phi,
            CoefficientModel::BoundedRational {
                lo,
                hi,
                beta_phi,
                beta_theta,
            } => lo + (hi - lo) / (1.0 + beta_phi * phi * phi + beta_theta * theta * theta),
        }
    }

    /// The declared lower bound, valid for all real arguments.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            CoefficientModel::Constant { value } => value,
            CoefficientModel::QuadraticPhi { base, .. } => base,
            CoefficientModel::BoundedRational { lo, .. } => lo,
        }
    }

    pub fn depends_on_phi(&self) -> bool {
        match *self {
            CoefficientModel::Constant { .. } => false,
            CoefficientModel::QuadraticPhi { curvature, .. } => curvature != 0.0,
            CoefficientModel::BoundedRational { lo, hi, beta_phi, .. } => hi != lo && beta_phi != 0.0,
        }
    }

    pub fn depends_on_theta(&self) -> bool {
        match *self {
            CoefficientModel::BoundedRational { lo, hi, beta_theta, .. } => hi != lo && beta_theta != 0.0,
            _ => false,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            CoefficientModel::Constant { value } => value.is_finite() && value > 0.0,
            CoefficientModel::QuadraticPhi { base, curvature } => {
                base.is_finite() && base > 0.0 && curvature.is_finite() && curvature >= 0.0
            }
            CoefficientModel::BoundedRational {
                lo,
                hi,
                beta_phi,
                beta_theta,
            } => {
                lo.is_finite()
                    && lo > 0.0
                    && hi.is_finite()
                    && hi >= lo
                    && beta_phi.is_finite()
                    && beta_phi >= 0.0
                    && beta_theta.is_finite()
                    && beta_theta >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::CoefficientBound(format!(
                "{name}: parameters do not give a positive lower bound ({self:?})"
            )))
        }
    }

    /// Cellwise evaluation; the result carries no boundary tag.
    pub fn eval_cells(&self, phi: &CellField, theta: &CellField) -> CellField {
        phi.zip_map(theta, |p, t| self.eval(p, t)).with_bc(ScalarBc::None)
    }

    /// Cell evaluation moved onto faces.
    pub fn eval_faces(&self, phi: &CellField, theta: &CellField, g: &Grid, mean: FaceMean) -> Result<FaceField> {
        face_mean(&self.eval_cells(phi, theta), g, mean)
    }
}

/// The singular potential `W(s) = (A/2)[(1+s)ln(1+s) + (1-s)ln(1-s)] - (A_c/2)s^2`
/// and its convex part `F(s) = W(s) + c_W s^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub a: f64,
    pub a_c: f64,
    pub c_w: f64,
}

impl Potential {
    pub fn new(a: f64, a_c: f64, c_w: f64) -> Result<Self> {
        if !(a > 0.0 && a < a_c && a_c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "potential requires 0 < A < A_c, got A = {a}, A_c = {a_c}"
            )));
        }
        if !(c_w >= a_c && c_w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "splitting constant requires c_W >= A_c, got c_W = {c_w}, A_c = {a_c}"
            )));
        }
        Ok(Self { a, a_c, c_w })
    }

    #[inline]
    fn check(s: f64) -> Result<()> {
        if s.abs() < 1.0 {
            Ok(())
        } else {
            Err(Error::PotentialDomain { value: s })
        }
    }

    /// `(1+s)ln(1+s) + (1-s)ln(1-s)`, with the endpoint limit `2 ln 2` at `|s| = 1`.
    fn entropy(s: f64) -> f64 {
        let t = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
        if s.abs() < 0.5 {
            (1.0 + s) * s.ln_1p() + (1.0 - s) * (-s).ln_1p()
        } else {
            t(1.0 + s) + t(1.0 - s)
        }
    }

    pub fn w_value(&self, s: f64) -> Result<f64> {
        if s.abs() > 1.0 || s.is_nan() {
            return Err(Error::PotentialDomain { value: s });
        }
        Ok(0.5 * self.a * Self::entropy(s) - 0.5 * self.a_c * s * s)
    }

    pub fn f_value(&self, s: f64) -> Result<f64> {
        Ok(self.w_value(s)? + self.c_w * s * s)
    }

    pub fn w_prime(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        // Evaluated on |s| so the result is exactly odd.
        let v = self.a * s.abs().atanh() - self.a_c * s.abs();
        Ok(if s < 0.0 { -v } else { v })
    }

    pub fn f_prime(&self, s: f64) -> Result<f64> {
        Ok(self.w_prime(s)? + 2.0 * self.c_w * s)
    }

    pub fn f_second(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        Ok(self.a / ((1.0 - s) * (1.0 + s)) + 2.0 * self.c_w - self.a_c)
    }

    /// Lower bound of `W` on `[-1, 1]`, attained where `W' = 0`.
    pub fn w_lower_bound(&self) -> f64 {
        -0.5 * self.a_c
    }
}

/// All model constants and coefficient laws.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    pub rho1: f64,
    pub rho2: f64,
    pub lambda0: f64,
    /// Eötvös constant term.
    pub a: f64,
    /// Eötvös temperature slope.
    pub b: f64,
    pub alpha: f64,
    pub gravity: f64,
    pub potential: Potential,
    pub viscosity: CoefficientModel,
    pub mobility: CoefficientModel,
    pub conductivity: CoefficientModel,
    pub face_mean: FaceMean,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            rho1: 1.0,
            rho2: 1.0,
            lambda0: 1.0,
            a: 1.0,
            b: 0.0,
            alpha: 0.0,
            gravity: 0.0,
            potential: Potential {
                a: 1.0,
                a_c: 2.0,
                c_w: 2.0,
            },
            viscosity: CoefficientModel::constant(1.0),
            mobility: CoefficientModel::constant(1.0),
            conductivity: CoefficientModel::constant(1.0),
            face_mean: FaceMean::Arithmetic,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")))
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        positive("rho1", self.rho1)?;
        positive("rho2", self.rho2)?;
        positive("lambda0", self.lambda0)?;
        positive("a", self.a)?;
        nonnegative("b", self.b)?;
        nonnegative("alpha", self.alpha)?;
        nonnegative("g", self.gravity)?;
        let p = self.potential;
        Potential::new(p.a, p.a_c, p.c_w)?;
        self.viscosity.validate("viscosity")?;
        self.mobility.validate("mobility")?;
        self.conductivity.validate("conductivity")?;
        Ok(())
    }

    /// `lambda0 * a`, the weight of the free energy.
    pub fn capillary(&self) -> f64 {
        self.lambda0 * self.a
    }

    #[inline]
    pub fn density(&self, phi: f64) -> f64 {
        0.5 * (self.rho2 - self.rho1) * phi + 0.5 * (self.rho1 + self.rho2)
    }

    pub fn density_cells(&self, phi: &CellField) -> CellField {
        phi.map(|p| self.density(p)).with_bc(ScalarBc::None)
    }

    /// Arithmetic face average of the density (linear in `phi`, so this is `rho` of the averaged `phi`).
    pub fn density_faces(&self, phi: &CellField, g: &Grid) -> Result<FaceField> {
        face_mean(&self.density_cells(phi), g, FaceMean::Arithmetic)
    }

    #[inline]
    pub fn surface_tension(&self, theta: f64) -> f64 {
        self.lambda0 * (self.a - self.b * theta)
    }

    /// Body force per unit volume, acting along `-y`.
    #[inline]
    pub fn buoyancy(&self, phi: f64, theta: f64) -> [f64; 2] {
        if self.gravity == 0.0 {
            return [0.0, 0.0];
        }
        [0.0, -self.density(phi) * (1.0 - self.alpha * theta) * self.gravity]
    }

    /// `J = -((rho2 - rho1)/2) m grad(mu)`; exactly zero when densities match.
    pub fn flux_j(&self, m_face: &FaceField, grad_mu: &FaceField) -> Result<FaceField> {
        if m_face.nx != grad_mu.nx
            || m_face.ny != grad_mu.ny
            || m_face.xcomp.len() != grad_mu.xcomp.len()
            || m_face.ycomp.len() != grad_mu.ycomp.len()
        {
            return Err(Error::Dimension("flux_j: face layouts differ".into()));
        }
        let c = -0.5 * (self.rho2 - self.rho1);
        let mut out = FaceField {
            nx: m_face.nx,
            ny: m_face.ny,
            xcomp: vec![0.0; m_face.xcomp.len()],
            ycomp: vec![0.0; m_face.ycomp.len()],
        };
        if c == 0.0 {
            return Ok(out);
        }
        for (o, (m, d)) in out.xcomp.iter_mut().zip(m_face.xcomp.iter().zip(&grad_mu.xcomp)) {
            *o = c * m * d;
        }
        for (o, (m, d)) in out.ycomp.iter_mut().zip(m_face.ycomp.iter().zip(&grad_mu.ycomp)) {
            *o = c * m * d;
        }
        Ok(out)
    }

    /// Buoyancy at the horizontal faces (mean of the two neighbouring cells); wall faces are 0.
    pub fn buoyancy_force(&self, phi: &CellField, theta: &CellField, g: &Grid) -> Result<FaceField> {
        phi.check(g)?;
        theta.check(g)?;
        let mut out = FaceField::zeros(g);
        if self.gravity == 0.0 {
            return Ok(out);
        }
        let cell: Vec<f64> = phi
            .values
            .iter()
            .zip(&theta.values)
            .map(|(&p, &t)| self.buoyancy(p, t)[1])
            .collect();
        for j in 1..g.ny {
            for i in 0..g.nx {
                out.ycomp[g.yface(i, j)] = 0.5 * (cell[g.cell(i, j - 1)] + cell[g.cell(i, j)]);
            }
        }
        Ok(out)
    }

    /// Korteweg force `lambda0 a mu grad(phi)` on faces (`mu` averaged to the face).
    pub fn korteweg_force(&self, mu: &CellField, phi: &CellField, g: &Grid) -> Result<FaceField> {
        mu.check(g)?;
        let gphi = gradient(&phi.clone().with_bc(ScalarBc::NeumannZero), g)?;
        let mu_f = face_mean(mu, g, FaceMean::Arithmetic)?;
        let mut f = mu_f.hadamard(&gphi);
        f.scale(self.capillary());
        Ok(f)
    }

    /// Coefficients of the Marangoni functional `v -> -lambda0 b (theta (grad phi (x) grad phi), grad v)`.
    ///
    /// `grad phi` is averaged from faces to cells and nodes; wall nodes carry no shear.
    /// Exactly zero when `b = 0`.
    pub fn marangoni_pairing(&self, phi: &CellField, theta: &CellField, g: &Grid) -> Result<StressPairing> {
        phi.check(g)?;
        theta.check(g)?;
        let mut p = StressPairing::zeros(g);
        if self.b == 0.0 {
            return Ok(p);
        }
        let c = -self.lambda0 * self.b;
        let gphi = gradient(&phi.clone().with_bc(ScalarBc::NeumannZero), g)?;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.cell(i, j);
                let gx = 0.5 * (gphi.xcomp[g.xface(i, j)] + gphi.xcomp[g.xface(i + 1, j)]);
                let gy = 0.5 * (gphi.ycomp[g.yface(i, j)] + gphi.ycomp[g.yface(i, j + 1)]);
                p.sxx[k] = c * theta.values[k] * gx * gx;
                p.syy[k] = c * theta.values[k] * gy * gy;
            }
        }
        let theta_n = node_mean(&theta.values, g);
        for j in 1..g.ny {
            for i in 1..g.nx {
                let n = g.node(i, j);
                let gx = 0.5 * (gphi.xcomp[g.xface(i, j - 1)] + gphi.xcomp[g.xface(i, j)]);
                let gy = 0.5 * (gphi.ycomp[g.yface(i - 1, j)] + gphi.ycomp[g.yface(i, j)]);
                let s = c * theta_n[n] * gx * gy;
                p.sxy[n] = s;
                p.syx[n] = s;
            }
        }
        Ok(p)
    }

    /// The Marangoni functional as a face force (`<force, v> = L(v)` for no-slip `v`).
    pub fn marangoni_force(&self, phi: &CellField, theta: &CellField, g: &Grid) -> Result<FaceField> {
        if self.b == 0.0 {
            phi.check(g)?;
            return Ok(FaceField::zeros(g));
        }
        Ok(self.marangoni_pairing(phi, theta, g)?.to_force(g))
    }

    /// Both capillary contributions for a single phase field.
    pub fn capillary_force(
        &self,
        phi: &CellField,
        mu: &CellField,
        theta_k: &CellField,
        g: &Grid,
    ) -> Result<CapillaryForce> {
        Ok(CapillaryForce {
            korteweg: self.korteweg_force(mu, phi, g)?,
            marangoni: self.marangoni_force(phi, theta_k, g)?,
        })
    }
}

/// Face-located capillary forces entering the momentum balance.
#[derive(Debug, Clone, PartialEq)]
pub struct CapillaryForce {
    pub korteweg: FaceField,
    pub marangoni: FaceField,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, VelocityGradient};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pot() -> Potential {
        Potential::new(1.0, 2.0, 2.0).unwrap()
    }

    #[test]
    fn density_examples() {
        let p = PhysParams {
            rho1: 1.0,
            rho2: 3.0,
            ..Default::default()
        };
        assert_eq!(p.density(0.0), 2.0);
        assert_eq!(p.density(-1.0), 1.0);
        assert_eq!(p.density(1.0), 3.0);
        let q = PhysParams::default();
        assert_eq!(q.density(0.37), 1.0);
    }

    #[test]
    fn surface_tension_examples() {
        let p = PhysParams {
            lambda0: 2.0,
            a: 1.0,
            b: 0.5,
            ..Default::default()
        };
        assert_eq!(p.surface_tension(0.0), 2.0);
        assert_eq!(p.surface_tension(2.0), 0.0);
        let q = PhysParams {
            b: 0.0,
            ..p
        };
        assert_eq!(q.surface_tension(123.0), 2.0);
    }

    #[test]
    fn buoyancy_examples() {
        let p = PhysParams {
            gravity: 0.0,
            ..Default::default()
        };
        assert_eq!(p.buoyancy(0.3, 0.7), [0.0, 0.0]);
        let p = PhysParams {
            gravity: 9.8,
            alpha: 0.5,
            ..Default::default()
        };
        assert_eq!(p.buoyancy(0.3, 2.0), [0.0, 0.0]);
        let p = PhysParams {
            rho1: 2.0,
            rho2: 2.0,
            alpha: 0.0,
            gravity: 9.8,
            ..Default::default()
        };
        let f = p.buoyancy(-0.4, 3.0);
        assert_eq!(f[0], 0.0);
        assert!((f[1] + 19.6).abs() < 1e-14);
    }

    #[test]
    fn flux_j_examples() {
        let g = Grid::unit_square(3).unwrap();
        let m = FaceField::constant(&g, 2.0, 2.0);
        let d = FaceField::constant(&g, 1.0, 1.0);
        let p = PhysParams {
            rho1: 1.0,
            rho2: 3.0,
            ..Default::default()
        };
        let j = p.flux_j(&m, &d).unwrap();
        assert!(j.xcomp.iter().chain(&j.ycomp).all(|&v| v == -2.0));
        assert_eq!(p.flux_j(&m, &FaceField::zeros(&g)).unwrap().max_abs(), 0.0);
        let q = PhysParams::default();
        let j = q.flux_j(&m, &d).unwrap();
        assert!(j.xcomp.iter().chain(&j.ycomp).all(|v| v.to_bits() == 0));
        let h = Grid::unit_square(4).unwrap();
        assert!(p.flux_j(&m, &FaceField::zeros(&h)).is_err());
    }

    #[test]
    fn potential_values_match_high_precision_oracle() {
        // mpmath, 30 digits.
        let p = pot();
        assert!((p.w_prime(0.5).unwrap() - (-0.450693855665945)).abs() < 1e-14);
        assert!((p.w_value(0.5).unwrap() - (-0.119187964058863)).abs() < 1e-14);
        assert_eq!(p.w_value(0.0).unwrap(), 0.0);
        assert_eq!(p.w_prime(0.0).unwrap(), 0.0);
        // Argument is the f64 nearest to 1 - 1e-12.
        assert!((p.w_prime(1.0 - 1e-12).unwrap() - 12.162095209228402).abs() < 1e-12);
        assert!((p.f_second(0.9).unwrap() - (1.0 / 0.19 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn potential_domain_errors() {
        let p = pot();
        assert!(matches!(p.w_prime(1.0), Err(Error::PotentialDomain { .. })));
        assert!(matches!(p.f_prime(-1.5), Err(Error::PotentialDomain { .. })));
        assert!(matches!(p.f_second(f64::NAN), Err(Error::PotentialDomain { .. })));
        assert!(Potential::new(2.0, 2.0, 2.0).is_err());
        assert!(Potential::new(1.0, 2.0, 1.5).is_err());
    }

    #[test]
    fn odd_symmetry_and_barrier() {
        let p = pot();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let s: f64 = rng.gen_range(-0.999..0.999);
            assert_eq!(p.w_prime(-s).unwrap(), -p.w_prime(s).unwrap());
        }
        let mut last = f64::NEG_INFINITY;
        for k in 3..=12 {
            let v = p.w_prime(1.0 - 10f64.powi(-k)).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn convex_part_bounded_below_by_splitting_constant() {
        let p = pot();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1_000_000 {
            let s: f64 = rng.gen_range(-1.0..1.0);
            if s.abs() < 1.0 {
                assert!(p.f_second(s).unwrap() >= p.c_w);
            }
        }
    }

    #[test]
    fn splitting_identity() {
        let p = Potential::new(0.7, 1.3, 2.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100_000 {
            let s: f64 = rng.gen_range(-0.999..0.999);
            let w = p.w_value(s).unwrap();
            let f = p.f_value(s).unwrap();
            assert!((w - (f - p.c_w * s * s)).abs() <= 1e-14);
            assert!(w >= p.w_lower_bound());
        }
    }

    #[test]
    fn coefficient_presets_respect_bounds() {
        let models = [
            CoefficientModel::constant(0.3),
            CoefficientModel::QuadraticPhi {
                base: 0.2,
                curvature: 1.5,
            },
            CoefficientModel::BoundedRational {
                lo: 0.1,
                hi: 2.0,
                beta_phi: 3.0,
                beta_theta: 0.5,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in models {
            m.validate("test").unwrap();
            for _ in 0..100_000 {
                let s1: f64 = rng.gen_range(-2.0..2.0);
                let s2: f64 = rng.gen_range(-2.0..2.0);
                assert!(m.eval(s1, s2) >= m.lower_bound());
            }
        }
        assert!(CoefficientModel::constant(0.0).validate("x").is_err());
        assert!(CoefficientModel::QuadraticPhi {
            base: 1.0,
            curvature: -1.0
        }
        .validate("x")
        .is_err());
        assert!(!models[0].depends_on_phi());
        assert!(models[1].depends_on_phi() && !models[1].depends_on_theta());
        assert!(models[2].depends_on_theta());
    }

    fn random_cells(g: &Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> CellField {
        CellField::from_values(
            g,
            (0..g.n_cells()).map(|_| rng.gen_range(lo..hi)).collect(),
            ScalarBc::NeumannZero,
        )
        .unwrap()
    }

    #[test]
    fn capillary_force_degenerate_cases() {
        let g = Grid::unit_square(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = PhysParams {
            b: 0.7,
            ..Default::default()
        };
        let phi = CellField::constant(&g, 0.2, ScalarBc::NeumannZero);
        let mu = random_cells(&g, &mut rng, -1.0, 1.0);
        let th = random_cells(&g, &mut rng, 0.0, 1.0);
        let f = p.capillary_force(&phi, &mu, &th, &g).unwrap();
        assert_eq!(f.korteweg.max_abs(), 0.0);
        assert_eq!(f.marangoni.max_abs(), 0.0);
        let q = PhysParams {
            b: 0.0,
            ..Default::default()
        };
        let phi = random_cells(&g, &mut rng, -0.9, 0.9);
        let f = q.capillary_force(&phi, &mu, &th, &g).unwrap();
        assert!(f.marangoni.xcomp.iter().chain(&f.marangoni.ycomp).all(|v| v.to_bits() == 0));
    }

    #[test]
    fn capillary_force_matches_direct_quadrature() {
        let g = Grid::unit_square(3).unwrap();
        let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = PhysParams {
            lambda0: 1.3,
            a: 0.8,
            b: 0.4,
            ..Default::default()
        };
        let phi = random_cells(&g, &mut rng, -0.9, 0.9);
        let mu = random_cells(&g, &mut rng, -1.0, 1.0);
        let th = random_cells(&g, &mut rng, 0.0, 1.0);
        let f = p.capillary_force(&phi, &mu, &th, &g).unwrap();
        let s = |i: usize, j: usize| phi.at(i, j);
        // Face gradients of phi with zero wall flux.
        let gx = |i: usize, j: usize| if i == 0 || i == nx { 0.0 } else { (s(i, j) - s(i - 1, j)) / dx };
        let gy = |i: usize, j: usize| if j == 0 || j == ny { 0.0 } else { (s(i, j) - s(i, j - 1)) / dy };
        for _ in 0..5 {
            let mut v = FaceField::zeros(&g);
            v.xcomp.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
            v.ycomp.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
            v.zero_normal_boundary();
            // Korteweg: sum over interior faces of lambda0 a mu_face dphi v dxdy.
            let mut kort = 0.0;
            for j in 0..ny {
                for i in 1..nx {
                    let muf = 0.5 * (mu.at(i - 1, j) + mu.at(i, j));
                    kort += muf * gx(i, j) * v.xcomp[g.xface(i, j)] * dx * dy;
                }
            }
            for j in 1..ny {
                for i in 0..nx {
                    let muf = 0.5 * (mu.at(i, j - 1) + mu.at(i, j));
                    kort += muf * gy(i, j) * v.ycomp[g.yface(i, j)] * dx * dy;
                }
            }
            kort *= p.lambda0 * p.a;
            assert!((inner(&f.korteweg, &v, &g).unwrap() - kort).abs() < 1e-13);
            // Marangoni: cell terms use cell-averaged gradients, node terms interior nodes only.
            let vg = VelocityGradient::of(&v, &g).unwrap();
            let mut mar = 0.0;
            for j in 0..ny {
                for i in 0..nx {
                    let cx = 0.5 * (gx(i, j) + gx(i + 1, j));
                    let cy = 0.5 * (gy(i, j) + gy(i, j + 1));
                    let c = g.cell(i, j);
                    mar += th.at(i, j) * (cx * cx * vg.exx[c] + cy * cy * vg.eyy[c]) * dx * dy;
                }
            }
            for j in 1..ny {
                for i in 1..nx {
                    let tn = 0.25 * (th.at(i - 1, j - 1) + th.at(i, j - 1) + th.at(i - 1, j) + th.at(i, j));
                    let nxg = 0.5 * (gx(i, j - 1) + gx(i, j));
                    let nyg = 0.5 * (gy(i - 1, j) + gy(i, j));
                    let n = g.node(i, j);
                    mar += tn * nxg * nyg * (vg.dudy[n] + vg.dvdx[n]) * dx * dy;
                }
            }
            mar *= -p.lambda0 * p.b;
            assert!((inner(&f.marangoni, &v, &g).unwrap() - mar).abs() < 1e-13);
        }
    }

    #[test]
    fn hydrostatic_buoyancy_is_uniform() {
        let g = Grid::unit_square(4).unwrap();
        let p = PhysParams {
            gravity: 2.0,
            ..Default::default()
        };
        let phi = CellField::constant(&g, 0.1, ScalarBc::NeumannZero);
        let th = CellField::constant(&g, 0.0, ScalarBc::None);
        let f = p.buoyancy_force(&phi, &th, &g).unwrap();
        for j in 1..g.ny {
            for i in 0..g.nx {
                assert_eq!(f.ycomp[g.yface(i, j)], -2.0);
            }
        }
        assert_eq!(f.max_abs_normal_boundary(), 0.0);
    }
}
