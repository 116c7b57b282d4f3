//! Skew-symmetric discretization of the convective term.
//!
//! With `D_u v = Σ_a δ_a (U_a ⊙ A_a v)` the flux-form transport and `D_u*`
//! its adjoint in the quadrature inner product, `S_u = (D_u - D_u*) / 2`
//! satisfies `⟨S_u v, v⟩ = 0` to roundoff.

use crate::error::Result;
use crate::field::VectorField;
use crate::grid::{Grid, Loc};
use crate::projection::leray_project;
use crate::stencil::{avg_op, diff_op, shift_placement};

fn scale_levels(grid: &Grid, loc: Loc, data: &mut [f64], inverse: bool) {
    let plane = grid.plane();
    for (k, lvl) in data.chunks_mut(plane).enumerate() {
        let w = grid.weight(loc, k);
        let s = if inverse { 1.0 / w } else { w };
        for v in lvl {
            *v *= s;
        }
    }
}

/// `(D_u v, D_u* v)` for one component of `v`.
fn flux_pair(u: &VectorField, v: &[f64], l: usize) -> (Vec<f64>, Vec<f64>) {
    let g = u.grid;
    let loc = Loc::of_component(l);
    let dims = g.dims(loc);
    let centred = loc.centred();
    let mut fwd = vec![0.0; v.len()];
    let mut weighted = v.to_vec();
    scale_levels(&g, loc, &mut weighted, false);
    let mut adj = vec![0.0; v.len()];
    for a in 0..3 {
        let mut flux_at = centred;
        flux_at[a] = !centred[a];
        let ua = shift_placement(&g, &u.comps[a], Loc::of_component(a).centred(), flux_at);
        let avg = avg_op(&g, a, centred[a]);
        let diff = diff_op(&g, a, centred[a]);

        let (mut f, fd) = avg.apply(v, dims, a);
        for (x, w) in f.iter_mut().zip(&ua) {
            *x *= w;
        }
        let (d, _) = diff.apply(&f, fd, a);
        for (o, x) in fwd.iter_mut().zip(d) {
            *o += x;
        }

        let (mut t, td) = diff.apply_transpose(&weighted, dims, a);
        for (x, w) in t.iter_mut().zip(&ua) {
            *x *= w;
        }
        let (back, _) = avg.apply_transpose(&t, td, a);
        for (o, x) in adj.iter_mut().zip(back) {
            *o += x;
        }
    }
    scale_levels(&g, loc, &mut adj, true);
    (fwd, adj)
}

/// Unprojected skew-symmetric advection `S_u v ≈ (u·∇) v`.
pub fn advect(u: &VectorField, v: &VectorField) -> VectorField {
    let comps = [0, 1, 2].map(|l| {
        let (f, a) = flux_pair(u, &v.comps[l], l);
        f.iter().zip(&a).map(|(x, y)| 0.5 * (x - y)).collect()
    });
    VectorField { grid: u.grid, comps }
}

/// `B(u, v) = P((u·∇) v)`.
pub fn nonlinear_term(u: &VectorField, v: &VectorField) -> Result<VectorField> {
    u.same_grid(v)?;
    leray_project(&advect(u, v))
}
