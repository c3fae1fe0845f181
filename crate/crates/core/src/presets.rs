//! Named initial and boundary data.
//!
//! Random fields use `ChaCha8Rng` seeded with `seed_from_u64`, drawing one
//! uniform sample per cell (or mode) in row-major order, so any field can be
//! regenerated from its seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{curl_of_streamfunction, BoundaryTrace, CellField, FaceField, Grid, ScalarBc};
use crate::scheme::InitialData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiPreset {
    Uniform {
        value: f64,
    },
    /// `mean + amplitude * U(-1, 1)` per cell.
    Spinodal {
        seed: u64,
        amplitude: f64,
        #[serde(default)]
        mean: f64,
    },
    /// `tanh((radius - r) / width)`: `+1` inside the disc.
    Bubble {
        center: [f64; 2],
        radius: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    X,
    Y,
}

fn coordinate(axis: Axis, x: f64, y: f64, g: &Grid) -> f64 {
    match axis {
        Axis::X => x / g.lx,
        Axis::Y => y / g.ly,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaPreset {
    Uniform {
        value: f64,
    },
    /// Linear from `low` to `high` across the domain.
    Gradient {
        low: f64,
        high: f64,
        #[serde(default)]
        axis: Axis,
    },
    /// Gaussian bump of height `peak - background`.
    HotSpot {
        background: f64,
        peak: f64,
        center: [f64; 2],
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityPreset {
    #[default]
    Zero,
    /// Single cell from the streamfunction `amplitude sin^2(pi x) sin^2(pi y)`.
    Vortex {
        amplitude: f64,
    },
    /// Streamfunction with random coefficients on the modes `sin(m pi x) sin(n pi y)`, `m, n <= modes`.
    Random {
        seed: u64,
        amplitude: f64,
        modes: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TracePreset {
    Constant {
        value: f64,
    },
    /// Linear from `low` to `high` along the axis.
    Linear {
        low: f64,
        high: f64,
        #[serde(default)]
        axis: Axis,
    },
    /// `mean + amplitude sin(2 pi wavenumber s)` along the axis.
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        wavenumber: f64,
        #[serde(default)]
        axis: Axis,
    },
}

impl PhiPreset {
    pub fn build(&self, g: &Grid) -> Result<CellField> {
        let f = match *self {
            PhiPreset::Uniform { value } => CellField::constant(g, value, ScalarBc::NeumannZero),
            PhiPreset::Spinodal { seed, amplitude, mean } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = (0..g.n_cells())
                    .map(|_| mean + amplitude * rng.gen_range(-1.0..=1.0))
                    .collect();
                CellField::from_values(g, v, ScalarBc::NeumannZero)?
            }
            PhiPreset::Bubble { center, radius, width } => {
                if !(radius > 0.0 && width > 0.0) {
                    return Err(Error::InvalidParameter("bubble radius and width must be positive".into()));
                }
                CellField::from_fn(g, ScalarBc::NeumannZero, |x, y| {
                    let r = ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt();
                    ((radius - r) / width).tanh()
                })
            }
        };
        if !(f.is_finite() && f.max_abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "phase-field preset leaves [-1, 1] (max |phi| = {})",
                f.max_abs()
            )));
        }
        Ok(f)
    }
}

impl ThetaPreset {
    pub fn build(&self, g: &Grid) -> CellField {
        match *self {
            ThetaPreset::Uniform { value } => CellField::constant(g, value, ScalarBc::None),
            ThetaPreset::Gradient { low, high, axis } => CellField::from_fn(g, ScalarBc::None, |x, y| {
                low + (high - low) * coordinate(axis, x, y, g)
            }),
            ThetaPreset::HotSpot {
                background,
                peak,
                center,
                radius,
            } => CellField::from_fn(g, ScalarBc::None, |x, y| {
                let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                background + (peak - background) * (-r2 / (radius * radius)).exp()
            }),
        }
    }
}

impl VelocityPreset {
    /// A discretely divergence-free velocity with zero wall-normal components.
    pub fn build(&self, g: &Grid) -> FaceField {
        let node_xy = |k: usize| {
            let (i, j) = (k % (g.nx + 1), k / (g.nx + 1));
            (i as f64 * g.dx / g.lx, j as f64 * g.dy / g.ly)
        };
        match *self {
            VelocityPreset::Zero => FaceField::zeros(g),
            VelocityPreset::Vortex { amplitude } => {
                let psi: Vec<f64> = (0..g.n_nodes())
                    .map(|k| {
                        let (x, y) = node_xy(k);
                        amplitude * (PI * x).sin().powi(2) * (PI * y).sin().powi(2)
                    })
                    .collect();
                curl_of_streamfunction(&psi, g)
            }
            VelocityPreset::Random { seed, amplitude, modes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let c: Vec<f64> = (0..modes * modes).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let psi: Vec<f64> = (0..g.n_nodes())
                    .map(|k| {
                        let (x, y) = node_xy(k);
                        let mut s = 0.0;
                        for n in 0..modes {
                            for m in 0..modes {
                                let w = 1.0 / ((m + 1) * (n + 1)) as f64;
                                s += c[m + modes * n] * w
                                    * ((m + 1) as f64 * PI * x).sin()
                                    * ((n + 1) as f64 * PI * y).sin();
                            }
                        }
                        amplitude * s
                    })
                    .collect();
                curl_of_streamfunction(&psi, g)
            }
        }
    }
}

impl TracePreset {
    pub fn build(&self, g: &Grid) -> BoundaryTrace {
        match *self {
            TracePreset::Constant { value } => BoundaryTrace::constant(g, value),
            TracePreset::Linear { low, high, axis } => {
                BoundaryTrace::from_fn(g, |x, y| low + (high - low) * coordinate(axis, x, y, g))
            }
            TracePreset::Sinusoidal {
                mean,
                amplitude,
                wavenumber,
                axis,
            } => BoundaryTrace::from_fn(g, |x, y| {
                mean + amplitude * (2.0 * PI * wavenumber * coordinate(axis, x, y, g)).sin()
            }),
        }
    }
}

/// The complete set of initial and boundary presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPresets {
    pub phi: PhiPreset,
    pub theta: ThetaPreset,
    #[serde(default)]
    pub velocity: VelocityPreset,
    pub boundary: TracePreset,
}

impl InitialPresets {
    pub fn build(&self, g: &Grid) -> Result<InitialData> {
        Ok(InitialData {
            phi0: self.phi.build(g)?,
            theta0: self.theta.build(g),
            trace: self.boundary.build(g),
            u0: self.velocity.build(g),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::divergence;

    #[test]
    fn spinodal_is_reproducible() {
        let g = Grid::unit_square(8).unwrap();
        let p = PhiPreset::Spinodal {
            seed: 42,
            amplitude: 0.05,
            mean: 0.0,
        };
        let a = p.build(&g).unwrap();
        assert_eq!(a, p.build(&g).unwrap());
        assert!(a.max_abs() <= 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let first: f64 = rng.gen_range(-1.0..=1.0);
        assert_eq!(a.values[0], 0.05 * first);
    }

    #[test]
    fn velocity_presets_are_solenoidal() {
        let g = Grid::new(12, 10, 1.0, 0.8).unwrap();
        for v in [
            VelocityPreset::Zero,
            VelocityPreset::Vortex { amplitude: 0.3 },
            VelocityPreset::Random {
                seed: 1,
                amplitude: 0.1,
                modes: 3,
            },
        ] {
            let u = v.build(&g);
            assert_eq!(u.max_abs_normal_boundary(), 0.0);
            assert!(divergence(&u, &g).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn presets_parse_from_toml_like_json() {
        let p: PhiPreset = serde_json::from_str(r#"{"kind":"bubble","center":[0.5,0.5],"radius":0.2,"width":0.05}"#)
            .unwrap();
        assert!(matches!(p, PhiPreset::Bubble { .. }));
        assert!(serde_json::from_str::<ThetaPreset>(r#"{"kind":"uniform","value":1,"extra":2}"#).is_err());
    }

    #[test]
    fn trace_presets() {
        let g = Grid::unit_square(4).unwrap();
        let t = TracePreset::Linear {
            low: 0.0,
            high: 1.0,
            axis: Axis::X,
        }
        .build(&g);
        assert_eq!(t.west, vec![0.0; 4]);
        assert_eq!(t.east, vec![1.0; 4]);
        assert!(t.min() >= 0.0 && t.max() <= 1.0);
    }
}
