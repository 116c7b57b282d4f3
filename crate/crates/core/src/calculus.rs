//! Discrete derivatives, quadrature and boundary-strip integrals.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, Loc};
use crate::stencil::{central_op, diff_op, shift};

/// Same-location derivative `d/dx_axis` of one component's samples.
pub fn partial_component(grid: &Grid, data: &[f64], loc: Loc, axis: usize) -> Vec<f64> {
    let dims = grid.dims(loc);
    central_op(grid, axis, dims[axis]).apply(data, dims, axis).0
}

/// Componentwise `∂_axis f` (axis 0, 1, 2 for x, y, z). Central differences;
/// periodic horizontally, second-order one-sided at the plates.
pub fn partial(f: &VectorField, axis: usize) -> VectorField {
    let g = f.grid;
    let comps = [0, 1, 2].map(|c| partial_component(&g, &f.comps[c], Loc::of_component(c), axis));
    VectorField { grid: g, comps }
}

/// Staggered divergence at cell centres.
pub fn divergence(f: &VectorField) -> ScalarField {
    let g = f.grid;
    let mut values = vec![0.0; g.len(Loc::P)];
    for (c, comp) in f.comps.iter().enumerate() {
        let loc = Loc::of_component(c);
        let op = diff_op(&g, c, true);
        let (d, _) = op.apply(comp, g.dims(loc), c);
        for (v, x) in values.iter_mut().zip(d) {
            *v += x;
        }
    }
    ScalarField { grid: g, values }
}

/// Staggered gradient of a cell-centred scalar. Plate-normal samples are zero
/// (homogeneous Neumann).
pub fn gradient(p: &ScalarField) -> VectorField {
    let g = p.grid;
    let dims = g.dims(Loc::P);
    let comps = [0, 1, 2].map(|c| diff_op(&g, c, false).apply(&p.values, dims, c).0);
    VectorField { grid: g, comps }
}

/// Interpolate component `c` of `f` onto `loc`.
pub fn component_at(f: &VectorField, c: usize, loc: Loc) -> Vec<f64> {
    let from = Loc::of_component(c);
    if from == loc {
        f.comps[c].clone()
    } else {
        shift(&f.grid, &f.comps[c], from, loc)
    }
}

pub(crate) fn weighted_dot(grid: &Grid, loc: Loc, a: &[f64], b: &[f64]) -> f64 {
    let plane = grid.plane();
    let mut total = 0.0;
    for (k, (ra, rb)) in a.chunks(plane).zip(b.chunks(plane)).enumerate() {
        let s: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
        total += grid.weight(loc, k) * s;
    }
    total
}

/// L² inner product (midpoint / trapezoid quadrature matching the stagger).
pub fn inner_product(f: &VectorField, g: &VectorField) -> Result<f64> {
    f.same_grid(g)?;
    Ok(inner_unchecked(f, g))
}

pub(crate) fn inner_unchecked(f: &VectorField, g: &VectorField) -> f64 {
    (0..3).map(|c| weighted_dot(&f.grid, Loc::of_component(c), &f.comps[c], &g.comps[c])).sum()
}

pub fn l2_norm_sq(f: &VectorField) -> f64 {
    inner_unchecked(f, f)
}

pub fn l2_norm(f: &VectorField) -> f64 {
    l2_norm_sq(f).sqrt()
}

/// `‖∂_axis f‖`.
pub fn dir_seminorm(f: &VectorField, axis: usize) -> f64 {
    l2_norm(&partial(f, axis))
}

/// Length of the overlap between `[lo, hi]` and the strip `(0,δ) ∪ (1-δ,1)`.
fn strip_overlap(lo: f64, hi: f64, delta: f64) -> f64 {
    let bottom = (hi.min(delta) - lo.max(0.0)).max(0.0);
    let top = (hi.min(1.0) - lo.max(1.0 - delta)).max(0.0);
    bottom + top
}

/// `Σ_axes ‖∂_axis f‖²` restricted to the plate strip of width `delta`, by
/// fractional-cell masked quadrature. `axes` selects the derivatives
/// (`&[0,1,2]` for the full gradient, `&[0,1]` for tangential derivatives).
pub fn strip_integral(f: &VectorField, delta: f64, axes: &[usize]) -> Result<f64> {
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::Precondition(format!("strip width {delta} outside (0, 1/4]")));
    }
    let g = f.grid;
    let area = g.hx * g.hy;
    let plane = g.plane();
    let mut total = 0.0;
    for c in 0..3 {
        let loc = Loc::of_component(c);
        let wz: Vec<f64> = (0..g.nz_at(loc))
            .map(|k| {
                let (lo, hi) = g.z_cell(loc, k);
                strip_overlap(lo, hi, delta)
            })
            .collect();
        for &axis in axes {
            let d = partial_component(&g, &f.comps[c], loc, axis);
            for (k, row) in d.chunks(plane).enumerate() {
                if wz[k] > 0.0 {
                    total += area * wz[k] * row.iter().map(|v| v * v).sum::<f64>();
                }
            }
        }
    }
    Ok(total)
}

/// `‖∇f‖²` over the strip `T² x [(0,δ) ∪ (1-δ,1)]`, `0 < δ ≤ 1/4`.
/// Returns the squared seminorm.
pub fn strip_seminorm(f: &VectorField, delta: f64) -> Result<f64> {
    strip_integral(f, delta, &[0, 1, 2])
}
