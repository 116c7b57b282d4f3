//! Scalar and vector samples on a [`Grid`].

use crate::error::{Error, Result};
use crate::grid::{Grid, Loc};

/// Cell-centred scalar (pressure, divergence).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { values: vec![0.0; grid.len(Loc::P)], grid }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = grid.points(Loc::P).into_iter().map(f).collect();
        ScalarField { grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.cell_volume();
        (self.values.iter().map(|v| v * v).sum::<f64>() * w).sqrt()
    }
}

/// Velocity-like field with component `c` stored at `Loc::of_component(c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub comps: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField { comps: Loc::VELOCITY.map(|l| vec![0.0; grid.len(l)]), grid }
    }

    /// Sample `f(component, point)` at each component's own location.
    pub fn from_fn(grid: Grid, f: impl Fn(usize, [f64; 3]) -> f64) -> Self {
        let comps = [0, 1, 2].map(|c| grid.points(Loc::of_component(c)).into_iter().map(|p| f(c, p)).collect());
        VectorField { grid, comps }
    }

    pub fn same_grid(&self, other: &VectorField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        debug_assert_eq!(self.grid, other.grid);
        for (s, o) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in s.iter_mut().zip(o) {
                *x += a * y;
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for s in &mut self.comps {
            for x in s.iter_mut() {
                *x *= a;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    /// Largest |u^3| on the two plates.
    pub fn normal_trace_max(&self) -> f64 {
        let plane = self.grid.plane();
        let top = self.grid.nz * plane;
        let w = &self.comps[2];
        w[..plane].iter().chain(&w[top..top + plane]).fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Set the plate samples of the normal component to zero.
    pub fn zero_normal_trace(&mut self) {
        let plane = self.grid.plane();
        let top = self.grid.nz * plane;
        let w = &mut self.comps[2];
        w[..plane].fill(0.0);
        w[top..top + plane].fill(0.0);
    }
}
