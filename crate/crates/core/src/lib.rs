//! Anisotropic stochastic Navier-Stokes between two plates.
//!
//! Staggered finite differences on `T² x (0,1)`, transport-stretching noise
//! with separate horizontal and vertical viscous scalings, an Euler reference
//! solver, the boundary-layer corrector and the inviscid-limit experiment
//! harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advection;
pub mod analytic;
pub mod calculus;
pub mod corrector;
pub mod error;
pub mod euler;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod noise;
pub mod projection;
pub mod rng;
pub mod snapshot;
pub mod sns;
pub mod stats;
mod stencil;

pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use grid::{make_grid, Grid, Loc};
pub use projection::{leray_project, ViscosityPair};
