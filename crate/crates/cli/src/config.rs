//! Run configuration files.
//!
//! A configuration is a TOML document with the sections `[grid]`,
//! `[physics]` (with the subtable `[physics.potential]`), `[scheme]`,
//! `[initial]`, `[boundary]` and `[output]`. Only `grid.nx`, `grid.ny` and
//! `initial.phi` are required; everything else has a default. Unknown keys
//! are rejected in every section.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thermocap_core::grid::{FaceMean, Grid};
use thermocap_core::physics::{CoefficientModel, PhysParams, Potential};
use thermocap_core::presets::{InitialPresets, PhiPreset, ThetaPreset, TracePreset, VelocityPreset};
use thermocap_core::scheme::{InitialData, SchemeConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl From<thermocap_core::Error> for ConfigError {
    fn from(e: thermocap_core::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
}

fn one() -> f64 {
    1.0
}

/// Coefficients of the logarithmic potential; `c_w` defaults to `a_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub a: f64,
    pub a_c: f64,
    #[serde(default)]
    pub c_w: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            a_c: 2.0,
            c_w: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub lambda0: f64,
    /// Surface tension at zero temperature.
    pub a: f64,
    /// Decrease of surface tension per unit temperature.
    pub b: f64,
    pub alpha: f64,
    pub gravity: f64,
    pub face_mean: FaceMean,
    pub potential: PotentialConfig,
    pub viscosity: CoefficientModel,
    pub mobility: CoefficientModel,
    pub conductivity: CoefficientModel,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        let p = PhysParams::default();
        Self {
            rho1: p.rho1,
            rho2: p.rho2,
            lambda0: p.lambda0,
            a: p.a,
            b: p.b,
            alpha: p.alpha,
            gravity: p.gravity,
            face_mean: p.face_mean,
            potential: PotentialConfig::default(),
            viscosity: p.viscosity,
            mobility: p.mobility,
            conductivity: p.conductivity,
        }
    }
}

impl PhysicsConfig {
    /// Validated physical parameters.
    pub fn params(&self) -> Result<PhysParams, ConfigError> {
        let pc = self.potential;
        let potential = Potential::new(pc.a, pc.a_c, pc.c_w.unwrap_or(pc.a_c))?;
        let p = PhysParams {
            rho1: self.rho1,
            rho2: self.rho2,
            lambda0: self.lambda0,
            a: self.a,
            b: self.b,
            alpha: self.alpha,
            gravity: self.gravity,
            potential,
            viscosity: self.viscosity,
            mobility: self.mobility,
            conductivity: self.conductivity,
            face_mean: self.face_mean,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub phi: PhiPreset,
    #[serde(default = "zero_theta")]
    pub theta: ThetaPreset,
    #[serde(default)]
    pub velocity: VelocityPreset,
}

fn zero_theta() -> ThetaPreset {
    ThetaPreset::Uniform { value: 0.0 }
}

fn zero_trace() -> TracePreset {
    TracePreset::Constant { value: 0.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write field snapshots every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Keep every this many ledger rows (the first and last are always kept).
    pub ledger_every: usize,
    pub csv: bool,
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("output"),
            snapshot_every: 0,
            ledger_every: 1,
            csv: true,
            vtk: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub initial: InitialConfig,
    #[serde(default = "zero_trace")]
    pub boundary: TracePreset,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Ok(Grid::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)?)
    }

    pub fn params(&self) -> Result<PhysParams, ConfigError> {
        self.physics.params()
    }

    pub fn presets(&self) -> InitialPresets {
        InitialPresets {
            phi: self.initial.phi,
            theta: self.initial.theta,
            velocity: self.initial.velocity,
            boundary: self.boundary,
        }
    }

    pub fn initial_data(&self, g: &Grid) -> Result<InitialData, ConfigError> {
        Ok(self.presets().build(g)?)
    }

    /// Checks every invariant the core would otherwise reject later.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = self.grid()?;
        self.params()?;
        self.scheme.validate()?;
        self.initial_data(&g)?;
        if self.output.ledger_every == 0 {
            return Err(ConfigError::Invalid("output.ledger_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Serializes back to TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is representable in TOML")
    }
}

/// Parses and validates a configuration from text.
pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nnx = 8\nny = 8\n\n[initial]\nphi = { kind = \"uniform\", value = 0.2 }\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let c = parse_str(MINIMAL).unwrap();
        assert_eq!(c.grid.lx, 1.0);
        assert_eq!(c.scheme, SchemeConfig::default());
        assert_eq!(c.physics, PhysicsConfig::default());
        assert_eq!(c.output, OutputConfig::default());
        assert_eq!(c.boundary, TracePreset::Constant { value: 0.0 });
    }

    #[test]
    fn round_trips_through_toml() {
        let c = parse_str(MINIMAL).unwrap();
        assert_eq!(parse_str(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn potential_ordering_is_enforced() {
        let text = format!("{MINIMAL}\n[physics.potential]\na = 2.0\na_c = 1.5\n");
        let e = parse_str(&text).unwrap_err().to_string();
        assert!(e.contains("0 < A < A_c"), "{e}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("[initial]", "[physics]\nviscocity = 1.0\n\n[initial]");
        let e = parse_str(&text).unwrap_err().to_string();
        assert!(e.contains("viscocity"), "{e}");
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn missing_required_key() {
        let e = parse_str("[grid]\nnx = 4\n").unwrap_err().to_string();
        assert!(e.contains("ny"), "{e}");
    }
}
