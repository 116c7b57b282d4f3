//! Leray projection and the implicit anisotropic viscous solve.
//!
//! Both reduce to one tridiagonal system per horizontal Fourier mode.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::calculus::{divergence, gradient};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, Loc};

struct Plans {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
    /// Horizontal Laplacian symbol per mode, `index = my * nx + mx`.
    lambda: Vec<f64>,
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, usize), Rc<Plans>>> = RefCell::new(HashMap::new());
}

fn symbol(m: usize, n: usize) -> f64 {
    let s = (PI * m as f64 / n as f64).sin();
    -4.0 * (n * n) as f64 * s * s
}

fn plans(grid: &Grid) -> Rc<Plans> {
    let key = (grid.nx, grid.ny);
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry(key)
            .or_insert_with(|| {
                let (nx, ny) = key;
                let mut planner = FftPlanner::new();
                let mut lambda = Vec::with_capacity(nx * ny);
                for my in 0..ny {
                    for mx in 0..nx {
                        lambda.push(symbol(mx, nx) + symbol(my, ny));
                    }
                }
                Rc::new(Plans {
                    nx,
                    ny,
                    fx: planner.plan_fft_forward(nx),
                    ix: planner.plan_fft_inverse(nx),
                    fy: planner.plan_fft_forward(ny),
                    iy: planner.plan_fft_inverse(ny),
                    lambda,
                })
            })
            .clone()
    })
}

impl Plans {
    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let (nx, ny) = (self.nx, self.ny);
        let (fx, fy) = if inverse { (&self.ix, &self.iy) } else { (&self.fx, &self.fy) };
        let mut col = vec![Complex64::default(); nx * ny];
        for plane in buf.chunks_mut(nx * ny) {
            fx.process(plane);
            for j in 0..ny {
                for i in 0..nx {
                    col[i * ny + j] = plane[j * nx + i];
                }
            }
            fy.process(&mut col);
            for j in 0..ny {
                for i in 0..nx {
                    plane[j * nx + i] = col[i * ny + j];
                }
            }
        }
        if inverse {
            let s = 1.0 / (nx * ny) as f64;
            for v in buf.iter_mut() {
                *v *= s;
            }
        }
    }

    fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    fn inverse(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut buf, true);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Constant-coefficient tridiagonal system: `off` on both off-diagonals,
/// `diag` inside, `end` on the first and last rows.
#[derive(Clone, Copy)]
struct Tri {
    off: f64,
    diag: f64,
    end: f64,
}

/// Thomas algorithm; `pin_first` replaces row 0 with `x_0 = 0`.
fn thomas(t: Tri, rhs: &mut [Complex64], pin_first: bool, work: &mut Vec<f64>) -> Result<()> {
    let n = rhs.len();
    work.clear();
    work.resize(n, 0.0);
    let d = |k: usize| if k == 0 || k == n - 1 { t.end } else { t.diag };
    let (mut b0, c0) = (d(0), t.off);
    if pin_first {
        b0 = 1.0;
        rhs[0] = Complex64::default();
    }
    let c_first = if pin_first { 0.0 } else { c0 };
    if b0.abs() < 1e-300 {
        return Err(Error::Tridiagonal { row: 0, pivot: b0 });
    }
    work[0] = c_first / b0;
    rhs[0] /= b0;
    for k in 1..n {
        let pivot = d(k) - t.off * work[k - 1];
        if !(pivot.abs() > 1e-300) {
            return Err(Error::Tridiagonal { row: k, pivot });
        }
        work[k] = t.off / pivot;
        let prev = rhs[k - 1];
        rhs[k] = (rhs[k] - prev * t.off) / pivot;
    }
    for k in (0..n - 1).rev() {
        let next = rhs[k + 1];
        rhs[k] -= next * work[k];
    }
    Ok(())
}

/// Solve one tridiagonal column per horizontal mode over levels `lo..hi`.
fn solve_modes(
    p: &Plans,
    spec: &mut [Complex64],
    plane: usize,
    lo: usize,
    hi: usize,
    tri: impl Fn(f64) -> Tri,
    pin_zero_mode: bool,
) -> Result<()> {
    let n = hi - lo;
    let mut col = vec![Complex64::default(); n];
    let mut work = Vec::with_capacity(n);
    for m in 0..plane {
        for (r, v) in col.iter_mut().enumerate() {
            *v = spec[(lo + r) * plane + m];
        }
        thomas(tri(p.lambda[m]), &mut col, pin_zero_mode && m == 0, &mut work)?;
        for (r, v) in col.iter().enumerate() {
            spec[(lo + r) * plane + m] = *v;
        }
    }
    Ok(())
}

/// Solve the Neumann problem `div grad p = rhs` at cell centres; `p` has zero mean.
pub fn solve_pressure(rhs: &ScalarField) -> Result<ScalarField> {
    let g = rhs.grid;
    let p = plans(&g);
    let plane = g.plane();
    let ih2 = 1.0 / (g.hz * g.hz);
    let mut spec = p.forward(&rhs.values);
    solve_modes(&p, &mut spec, plane, 0, g.nz, |lam| Tri { off: ih2, diag: lam - 2.0 * ih2, end: lam - ih2 }, true)?;
    let mut values = p.inverse(spec);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in &mut values {
        *v -= mean;
    }
    Ok(ScalarField { grid: g, values })
}

/// Discrete Leray projection: zero the plate-normal samples, then remove the
/// gradient part. Divergence-free to roundoff, orthogonal and idempotent.
pub fn leray_project(f: &VectorField) -> Result<VectorField> {
    f.ensure_finite("leray_project input")?;
    let mut out = f.clone();
    out.zero_normal_trace();
    let p = solve_pressure(&divergence(&out))?;
    out.axpy(-1.0, &gradient(&p));
    Ok(out)
}

/// Horizontal and vertical viscosities.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ViscosityPair {
    pub nu_h: f64,
    pub nu_z: f64,
}

impl ViscosityPair {
    pub fn new(nu_h: f64, nu_z: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v < 1.0;
        if !ok(nu_h) || !ok(nu_z) {
            return Err(Error::Precondition(format!(
                "viscosities must lie in (0, 1), got nu_h = {nu_h}, nu_z = {nu_z}"
            )));
        }
        Ok(ViscosityPair { nu_h, nu_z })
    }

    pub fn ratio(&self) -> f64 {
        self.nu_z / self.nu_h
    }

    pub fn sqrt_nu_h(&self) -> f64 {
        self.nu_h.sqrt()
    }

    pub fn sqrt_nu_z(&self) -> f64 {
        self.nu_z.sqrt()
    }
}

/// `(I - dt ν_h Δ_h - dt ν_z ∂_33)^{-1} f` with no-slip rows: tangential
/// components reflect across the plates, the normal component is zero there.
pub fn viscous_solve(f: &VectorField, visc: ViscosityPair, dt: f64) -> Result<VectorField> {
    let g = f.grid;
    let p = plans(&g);
    let plane = g.plane();
    let ah = dt * visc.nu_h;
    let az = dt * visc.nu_z / (g.hz * g.hz);
    let mut out = VectorField::zeros(g);
    for c in 0..2 {
        let mut spec = p.forward(&f.comps[c]);
        solve_modes(
            &p,
            &mut spec,
            plane,
            0,
            g.nz,
            |lam| Tri { off: -az, diag: 1.0 - ah * lam + 2.0 * az, end: 1.0 - ah * lam + 3.0 * az },
            false,
        )?;
        out.comps[c] = p.inverse(spec);
    }
    let mut spec = p.forward(&f.comps[2]);
    solve_modes(
        &p,
        &mut spec,
        plane,
        1,
        g.nz,
        |lam| Tri { off: -az, diag: 1.0 - ah * lam + 2.0 * az, end: 1.0 - ah * lam + 2.0 * az },
        false,
    )?;
    spec[..plane].fill(Complex64::default());
    spec[g.nz * plane..].fill(Complex64::default());
    out.comps[2] = p.inverse(spec);
    Ok(out)
}

/// Squared gradient norms `(Σ_{j=1,2} ‖∂_j u‖², ‖∂_3 u‖²)` in the face-difference
/// form that matches the viscous operator: `⟨L u, u⟩ = -ν_h d_h - ν_z d_z`.
pub fn dissipation(u: &VectorField) -> (f64, f64) {
    let g = u.grid;
    let (nx, ny, plane) = (g.nx, g.ny, g.plane());
    let mut dh = 0.0;
    let mut dz = 0.0;
    for c in 0..3 {
        let loc = Loc::of_component(c);
        let f = &u.comps[c];
        let nzl = g.nz_at(loc);
        for k in 0..nzl {
            let w = g.weight(loc, k);
            let lvl = &f[k * plane..(k + 1) * plane];
            let mut s = 0.0;
            for j in 0..ny {
                for i in 0..nx {
                    let v = lvl[j * nx + i];
                    let dx = (lvl[j * nx + (i + 1) % nx] - v) * nx as f64;
                    let dy = (lvl[((j + 1) % ny) * nx + i] - v) * ny as f64;
                    s += dx * dx + dy * dy;
                }
            }
            dh += w * s;
        }
        let vol = g.cell_volume();
        let inv = 1.0 / g.hz;
        let sq = |a: &[f64], b: &[f64], scale: f64| -> f64 {
            a.iter().zip(b).map(|(x, y)| ((y - x) * scale).powi(2)).sum::<f64>()
        };
        let level = |k: usize| &f[k * plane..(k + 1) * plane];
        if loc == Loc::W {
            for k in 0..g.nz {
                dz += vol * sq(level(k), level(k + 1), inv);
            }
        } else {
            for k in 1..g.nz {
                dz += vol * sq(level(k - 1), level(k), inv);
            }
            let zero = vec![0.0; plane];
            dz += 0.5 * vol * sq(&zero, level(0), 2.0 * inv);
            dz += 0.5 * vol * sq(&zero, level(g.nz - 1), 2.0 * inv);
        }
    }
    (dh, dz)
}

/// Discrete anisotropic viscous operator `ν_h Δ_h u + ν_z ∂_33 u` with the
/// same no-slip rows as [`viscous_solve`].
pub fn viscous_operator(u: &VectorField, visc: ViscosityPair) -> VectorField {
    let g = u.grid;
    let (nx, ny, plane) = (g.nx, g.ny, g.plane());
    let ihx2 = (nx * nx) as f64;
    let ihy2 = (ny * ny) as f64;
    let ihz2 = 1.0 / (g.hz * g.hz);
    let mut out = VectorField::zeros(g);
    for c in 0..3 {
        let loc = Loc::of_component(c);
        let nzl = g.nz_at(loc);
        let f = &u.comps[c];
        let o = &mut out.comps[c];
        for k in 0..nzl {
            if loc == Loc::W && (k == 0 || k == g.nz) {
                continue;
            }
            for j in 0..ny {
                for i in 0..nx {
                    let id = k * plane + j * nx + i;
                    let v = f[id];
                    let lap_h = (f[k * plane + j * nx + (i + 1) % nx] + f[k * plane + j * nx + (i + nx - 1) % nx]
                        - 2.0 * v)
                        * ihx2
                        + (f[k * plane + ((j + 1) % ny) * nx + i] + f[k * plane + ((j + ny - 1) % ny) * nx + i]
                            - 2.0 * v)
                            * ihy2;
                    let below = if k == 0 { -v } else { f[id - plane] };
                    let above = if k + 1 == nzl { -v } else { f[id + plane] };
                    let lap_z = (below + above - 2.0 * v) * ihz2;
                    o[id] = visc.nu_h * lap_h + visc.nu_z * lap_z;
                }
            }
        }
    }
    out
}
