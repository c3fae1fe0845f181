use super::Grid;
use crate::error::{Error, Result};

/// Values of a scalar on the four walls, sampled at boundary face centres.
///
/// `west`/`east` run over `j` (length `ny`), `south`/`north` over `i` (length `nx`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub south: Vec<f64>,
    pub north: Vec<f64>,
}

impl BoundaryTrace {
    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            west: vec![value; grid.ny],
            east: vec![value; grid.ny],
            south: vec![value; grid.nx],
            north: vec![value; grid.nx],
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(x, y)` at the centre of every boundary face.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            west: (0..grid.ny).map(|j| f(0.0, grid.yc(j))).collect(),
            east: (0..grid.ny).map(|j| f(grid.lx, grid.yc(j))).collect(),
            south: (0..grid.nx).map(|i| f(grid.xc(i), 0.0)).collect(),
            north: (0..grid.nx).map(|i| f(grid.xc(i), grid.ly)).collect(),
        }
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        if self.west.len() != grid.ny
            || self.east.len() != grid.ny
            || self.south.len() != grid.nx
            || self.north.len() != grid.nx
        {
            return Err(Error::Dimension(format!(
                "boundary trace does not match {}x{} grid",
                grid.nx, grid.ny
            )));
        }
        if !self.values().all(f64::is_finite) {
            return Err(Error::InvalidParameter("boundary trace has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.west
            .iter()
            .chain(&self.east)
            .chain(&self.south)
            .chain(&self.north)
            .copied()
    }

    pub fn min(&self) -> f64 {
        self.values().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Boundary-condition tag carried by a cell field.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ScalarBc {
    /// Zero normal derivative.
    NeumannZero,
    /// Prescribed wall values.
    Dirichlet(BoundaryTrace),
    /// No boundary data (pressure, coefficients, operator outputs).
    #[default]
    None,
}

/// Cell-centred scalar, stored row-major with `i` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub bc: ScalarBc,
}

impl CellField {
    pub fn zeros(grid: &Grid, bc: ScalarBc) -> Self {
        Self::constant(grid, 0.0, bc)
    }

    pub fn constant(grid: &Grid, value: f64, bc: ScalarBc) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            values: vec![value; grid.n_cells()],
            bc,
        }
    }

    pub fn from_fn(grid: &Grid, bc: ScalarBc, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.xc(i), grid.yc(j)));
            }
        }
        Self {
            nx: grid.nx,
            ny: grid.ny,
            values,
            bc,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>, bc: ScalarBc) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Dimension(format!(
                "expected {} cell values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        Ok(Self {
            nx: grid.nx,
            ny: grid.ny,
            values,
            bc,
        })
    }

    pub fn with_bc(mut self, bc: ScalarBc) -> Self {
        self.bc = bc;
        self
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        if self.nx != grid.nx || self.ny != grid.ny || self.values.len() != grid.n_cells() {
            return Err(Error::Dimension(format!(
                "cell field is {}x{}, grid is {}x{}",
                self.nx, self.ny, grid.nx, grid.ny
            )));
        }
        if let ScalarBc::Dirichlet(trace) = &self.bc {
            trace.check(grid)?;
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.nx * j]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Elementwise map keeping the tag.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|&v| f(v)).collect(),
            bc: self.bc.clone(),
        }
    }

    /// Elementwise combination with another field of the same shape, keeping `self`'s tag.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        Self {
            nx: self.nx,
            ny: self.ny,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            bc: self.bc.clone(),
        }
    }

    /// Subtracts the mean so the field sums to zero.
    pub fn remove_mean(&mut self) {
        let m = self.mean();
        self.values.iter_mut().for_each(|v| *v -= m);
    }
}

/// Normal velocity-like components on cell faces.
///
/// `xcomp[(nx+1)*j + i]` lives on the vertical face at `x = i*dx`;
/// `ycomp[nx*j + i]` on the horizontal face at `y = j*dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub nx: usize,
    pub ny: usize,
    pub xcomp: Vec<f64>,
    pub ycomp: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0, 0.0)
    }

    pub fn constant(grid: &Grid, vx: f64, vy: f64) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            xcomp: vec![vx; grid.n_xfaces()],
            ycomp: vec![vy; grid.n_yfaces()],
        }
    }

    /// Samples `fx` at vertical-face centres and `fy` at horizontal-face centres.
    pub fn from_fns(
        grid: &Grid,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut xcomp = Vec::with_capacity(grid.n_xfaces());
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                xcomp.push(fx(i as f64 * grid.dx, grid.yc(j)));
            }
        }
        let mut ycomp = Vec::with_capacity(grid.n_yfaces());
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                ycomp.push(fy(grid.xc(i), j as f64 * grid.dy));
            }
        }
        Self {
            nx: grid.nx,
            ny: grid.ny,
            xcomp,
            ycomp,
        }
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        if self.nx != grid.nx
            || self.ny != grid.ny
            || self.xcomp.len() != grid.n_xfaces()
            || self.ycomp.len() != grid.n_yfaces()
        {
            return Err(Error::Dimension(format!(
                "face field is {}x{}, grid is {}x{}",
                self.nx, self.ny, grid.nx, grid.ny
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.xcomp.len() + self.ycomp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.xcomp.iter().chain(&self.ycomp).all(|v| v.is_finite())
    }

    /// Concatenation `[xcomp, ycomp]`, the layout used by the Krylov solvers.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.xcomp);
        v.extend_from_slice(&self.ycomp);
        v
    }

    pub fn from_flat(grid: &Grid, flat: &[f64]) -> Self {
        let (x, y) = flat.split_at(grid.n_xfaces());
        Self {
            nx: grid.nx,
            ny: grid.ny,
            xcomp: x.to_vec(),
            ycomp: y.to_vec(),
        }
    }

    /// Sets the wall-normal components to zero (no-penetration).
    pub fn zero_normal_boundary(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        for j in 0..ny {
            self.xcomp[(nx + 1) * j] = 0.0;
            self.xcomp[(nx + 1) * j + nx] = 0.0;
        }
        for i in 0..nx {
            self.ycomp[i] = 0.0;
            self.ycomp[nx * ny + i] = 0.0;
        }
    }

    /// Largest absolute wall-normal component.
    pub fn max_abs_normal_boundary(&self) -> f64 {
        let (nx, ny) = (self.nx, self.ny);
        let mut m: f64 = 0.0;
        for j in 0..ny {
            m = m
                .max(self.xcomp[(nx + 1) * j].abs())
                .max(self.xcomp[(nx + 1) * j + nx].abs());
        }
        for i in 0..nx {
            m = m.max(self.ycomp[i].abs()).max(self.ycomp[nx * ny + i].abs());
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.xcomp
            .iter()
            .chain(&self.ycomp)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, a: f64) {
        self.xcomp.iter_mut().chain(self.ycomp.iter_mut()).for_each(|v| *v *= a);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.xcomp.iter_mut().zip(&other.xcomp) {
            *s += a * o;
        }
        for (s, o) in self.ycomp.iter_mut().zip(&other.ycomp) {
            *s += a * o;
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Self) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            xcomp: self.xcomp.iter().zip(&other.xcomp).map(|(a, b)| a * b).collect(),
            ycomp: self.ycomp.iter().zip(&other.ycomp).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            xcomp: self.xcomp.iter().map(|&v| f(v)).collect(),
            ycomp: self.ycomp.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.xcomp.iter().chain(&self.ycomp).copied().fold(f64::INFINITY, f64::min)
    }
}
