//! Staggered-grid solver for two-phase flow with thermocapillary effects.
//!
//! The model couples incompressible Navier–Stokes with variable density,
//! a Cahn–Hilliard equation with the logarithmic Flory–Huggins potential and
//! a convective heat equation whose temperature sets the surface tension.
//! Time stepping is the partially implicit scheme: coefficients are frozen at
//! the previous level, the singular potential is split into a convex implicit
//! part and a concave explicit part, and the heat equation is solved for the
//! deviation from the harmonic extension of the wall temperature.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod physics;
pub mod presets;
pub mod scheme;

pub use error::{Error, Result};
