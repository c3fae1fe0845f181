//! Rectangular marker-and-cell grid.
//!
//! Scalars live at cell centres, velocity components on the faces normal to
//! them, and velocity-gradient shear components at the nodes. The discrete
//! gradient and divergence are built so that summation by parts holds exactly
//! (including the half-weighted boundary faces used for Dirichlet data), which
//! is what lets the energy identities of the time stepper close at round-off.

mod field;
mod ops;
mod velocity;

pub use field::{BoundaryTrace, CellField, FaceField, ScalarBc};
pub use ops::{
    convective_term, divergence, face_mean, gradient, inner, node_mean, weighted_laplacian,
    FaceMean, GridField,
};
pub use velocity::{
    curl_of_streamfunction, gradient_norm_sq, momentum_convection, skew_transport,
    strain_norm_sq, vector_laplacian, viscous_operator, StressPairing, VelocityGradient,
};

pub(crate) use ops::{convect_into, div_c_grad_into, divergence_into, gradient_into, Closure};
pub(crate) use velocity::{
    skew_transport_into, stokes_laplacian_into, viscous_into, ViscosityField,
};

use crate::error::{Error, Result};

/// Cell counts and spacings of a uniform rectangular grid on `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per axis, got {nx}x{ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "edge lengths must be positive and finite, got {lx} x {ly}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
        })
    }

    /// `n x n` cells on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_xfaces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn n_yfaces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn xface(&self, i: usize, j: usize) -> usize {
        i + (self.nx + 1) * j
    }

    #[inline]
    pub fn yface(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i + (self.nx + 1) * j
    }

    /// x coordinate of cell centre column `i`.
    pub fn xc(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn yc(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    /// Quadrature weight of vertical face `(i, j)`; boundary faces carry half a cell.
    #[inline]
    pub fn xface_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx {
            0.5 * self.cell_area()
        } else {
            self.cell_area()
        }
    }

    #[inline]
    pub fn yface_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny {
            0.5 * self.cell_area()
        } else {
            self.cell_area()
        }
    }

    #[inline]
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
        wx * wy * self.cell_area()
    }
}
