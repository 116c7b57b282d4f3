//! Staggered channel grid on the periodic box `[0,1)^2 x (0,1)`.
//!
//! Marker-and-cell placement. With `i, j, k` integer indices and `h` the
//! spacing along each axis:
//!
//! | location | x          | y          | z          | z samples |
//! |----------|------------|------------|------------|-----------|
//! | `U`      | `i h`      | `(j+½) h`  | `(k+½) h`  | `nz`      |
//! | `V`      | `(i+½) h`  | `j h`      | `(k+½) h`  | `nz`      |
//! | `W`      | `(i+½) h`  | `(j+½) h`  | `k h`      | `nz + 1`  |
//! | `P`      | `(i+½) h`  | `(j+½) h`  | `(k+½) h`  | `nz`      |
//!
//! Velocity component 1 lives at `U`, 2 at `V`, 3 at `W`, pressure and
//! divergence at `P`. The vertical component therefore has samples exactly
//! on the plates `z = 0` (`k = 0`) and `z = 1` (`k = nz`).
//!
//! Storage is x-fastest: `index = (k * ny + j) * nx + i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Loc {
    U,
    V,
    W,
    P,
}

impl Loc {
    pub const VELOCITY: [Loc; 3] = [Loc::U, Loc::V, Loc::W];

    pub fn of_component(c: usize) -> Loc {
        Loc::VELOCITY[c]
    }

    /// `true` along axes where the location sits at a cell centre.
    pub fn centred(self) -> [bool; 3] {
        match self {
            Loc::U => [false, true, true],
            Loc::V => [true, false, true],
            Loc::W => [true, true, false],
            Loc::P => [true, true, true],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

pub fn make_grid(nx: usize, ny: usize, nz: usize) -> Result<Grid> {
    Grid::new(nx, ny, nz)
}

impl Grid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx < 4 || ny < 4 || !nx.is_multiple_of(2) || !ny.is_multiple_of(2) || nz < 4 {
            return Err(Error::GridSize { nx, ny, nz });
        }
        Ok(Grid { nx, ny, nz, hx: 1.0 / nx as f64, hy: 1.0 / ny as f64, hz: 1.0 / nz as f64 })
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        [self.hx, self.hy, self.hz][axis]
    }

    pub fn min_spacing(&self) -> f64 {
        self.hx.min(self.hy).min(self.hz)
    }

    pub fn cell_volume(&self) -> f64 {
        self.hx * self.hy * self.hz
    }

    /// Number of vertical samples at `loc`.
    pub fn nz_at(&self, loc: Loc) -> usize {
        if loc == Loc::W {
            self.nz + 1
        } else {
            self.nz
        }
    }

    pub fn dims(&self, loc: Loc) -> [usize; 3] {
        [self.nx, self.ny, self.nz_at(loc)]
    }

    pub fn len(&self, loc: Loc) -> usize {
        self.nx * self.ny * self.nz_at(loc)
    }

    pub fn plane(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }

    /// Coordinate of sample `index` along `axis` for a (centred / not) placement.
    #[inline]
    pub fn coord(&self, axis: usize, centred: bool, index: usize) -> f64 {
        let h = self.spacing(axis);
        if centred {
            (index as f64 + 0.5) * h
        } else {
            index as f64 * h
        }
    }

    pub fn point(&self, loc: Loc, i: usize, j: usize, k: usize) -> [f64; 3] {
        let c = loc.centred();
        [self.coord(0, c[0], i), self.coord(1, c[1], j), self.coord(2, c[2], k)]
    }

    /// Coordinates of every sample at `loc`, in storage order.
    pub fn points(&self, loc: Loc) -> Vec<[f64; 3]> {
        let [nx, ny, nz] = self.dims(loc);
        let mut out = Vec::with_capacity(nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out.push(self.point(loc, i, j, k));
                }
            }
        }
        out
    }

    /// Vertical extent `[lo, hi]` of the quadrature cell owned by sample `k`.
    pub fn z_cell(&self, loc: Loc, k: usize) -> (f64, f64) {
        let z = self.coord(2, loc.centred()[2], k);
        let lo = (z - 0.5 * self.hz).max(0.0);
        let hi = (z + 0.5 * self.hz).min(1.0);
        (lo, hi)
    }

    /// Quadrature weight of a sample at vertical index `k`. Midpoint rule at
    /// cell centres, trapezoid rule on the face column (half weight on the plates).
    #[inline]
    pub fn weight(&self, loc: Loc, k: usize) -> f64 {
        if loc == Loc::W && (k == 0 || k == self.nz) {
            0.5 * self.cell_volume()
        } else {
            self.cell_volume()
        }
    }

    pub fn weights(&self, loc: Loc) -> Vec<f64> {
        let plane = self.plane();
        let mut w = Vec::with_capacity(self.len(loc));
        for k in 0..self.nz_at(loc) {
            let wk = self.weight(loc, k);
            w.extend(std::iter::repeat_n(wk, plane));
        }
        w
    }
}
