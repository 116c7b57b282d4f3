//! Transport-stretching noise with anisotropic viscous scaling.
//!
//! For a coefficient field `φ` and a vector field `f`:
//!
//! * transport `L_φ f = Σ_j φ^j ∂_j f`
//! * stretch `T_φ f = Σ_j f^j ∇φ^j`
//! * `G_φ = L_φ + T_φ`, with adjoint `G_φ* f = -L_φ f - (div φ) f + L_f φ`
//!
//! The kernels take per-component scales `s`, standing for the coefficient
//! `(s_1 φ^1, s_2 φ^2, s_3 φ^3)`. Horizontal noise uses `(1, 1, 0)`, vertical
//! `(0, 0, 1)` and the effective coefficient `(√ν_h, √ν_h, √ν_z)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::analytic::{AnalyticField, FieldSpec, Term};
use crate::calculus::{inner_unchecked, l2_norm, l2_norm_sq, partial_component};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::{Grid, Loc};
use crate::projection::leray_project;
use crate::stencil::shift;

pub use crate::projection::ViscosityPair;

/// Samples of a coefficient field and its first derivatives on a grid.
pub trait Coefficient: Sync {
    /// Component `c` sampled at the points of `loc`.
    fn sample(&self, grid: &Grid, c: usize, loc: Loc) -> Result<Arc<Vec<f64>>>;
    /// `∂_axis φ^c` sampled at the points of `loc`.
    fn sample_derivative(&self, grid: &Grid, c: usize, axis: usize, loc: Loc) -> Result<Arc<Vec<f64>>>;
    /// Largest `|φ^3|` on the plates.
    fn plate_trace(&self, grid: &Grid) -> Result<f64>;
    fn component_is_zero(&self, _c: usize) -> bool {
        false
    }
}

impl Coefficient for VectorField {
    fn sample(&self, grid: &Grid, c: usize, loc: Loc) -> Result<Arc<Vec<f64>>> {
        if *grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let from = Loc::of_component(c);
        Ok(Arc::new(if from == loc { self.comps[c].clone() } else { shift(grid, &self.comps[c], from, loc) }))
    }

    fn sample_derivative(&self, grid: &Grid, c: usize, axis: usize, loc: Loc) -> Result<Arc<Vec<f64>>> {
        if *grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let from = Loc::of_component(c);
        let d = partial_component(grid, &self.comps[c], from, axis);
        Ok(Arc::new(if from == loc { d } else { shift(grid, &d, from, loc) }))
    }

    fn plate_trace(&self, grid: &Grid) -> Result<f64> {
        if *grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.normal_trace_max())
    }
}

impl Coefficient for AnalyticField {
    fn sample(&self, grid: &Grid, c: usize, loc: Loc) -> Result<Arc<Vec<f64>>> {
        Ok(Arc::new(self.sample_at(grid, c, [0, 0, 0], loc)))
    }

    fn sample_derivative(&self, grid: &Grid, c: usize, axis: usize, loc: Loc) -> Result<Arc<Vec<f64>>> {
        let mut o = [0u8; 3];
        o[axis] = 1;
        Ok(Arc::new(self.sample_at(grid, c, o, loc)))
    }

    fn plate_trace(&self, _grid: &Grid) -> Result<f64> {
        Ok(AnalyticField::plate_trace(self))
    }

    fn component_is_zero(&self, c: usize) -> bool {
        self.component_is_empty(c)
    }
}

type CacheKey = ([usize; 3], usize, usize, Loc);

/// One correlation function `ξ_i` with cached grid samples and norms.
pub struct NoiseMode {
    field: AnalyticField,
    /// `max_{|α|≤2} ‖∂^α ξ‖_∞`.
    pub w2inf_norm: f64,
    linf: [f64; 3],
    w1inf: [f64; 3],
    cache: RwLock<HashMap<CacheKey, Arc<Vec<f64>>>>,
}

impl Clone for NoiseMode {
    fn clone(&self) -> Self {
        NoiseMode {
            field: self.field.clone(),
            w2inf_norm: self.w2inf_norm,
            linf: self.linf,
            w1inf: self.w1inf,
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl fmt::Debug for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseMode").field("spec", self.field.spec()).field("w2inf_norm", &self.w2inf_norm).finish()
    }
}

fn component_norms(field: &AnalyticField) -> ([f64; 3], [f64; 3]) {
    let n = 48;
    let mut linf = [0.0f64; 3];
    let mut w1 = [0.0f64; 3];
    for c in 0..3 {
        for k in 0..=n {
            for j in 0..n {
                for i in 0..n {
                    let p = [i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64];
                    let v = field.value(c, p).abs();
                    linf[c] = linf[c].max(v);
                    w1[c] = w1[c].max(v);
                    for a in 0..3 {
                        w1[c] = w1[c].max(field.partial(c, a, p).abs());
                    }
                }
            }
        }
    }
    (linf, w1)
}

impl NoiseMode {
    /// Rejects fields whose vertical component does not vanish on the plates.
    pub fn new(field: AnalyticField) -> Result<Self> {
        let trace = field.plate_trace();
        if trace > 1e-12 {
            return Err(Error::PlateTrace(trace));
        }
        let (linf, w1inf) = component_norms(&field);
        Ok(NoiseMode { w2inf_norm: field.w2inf_norm(), field, linf, w1inf, cache: RwLock::new(HashMap::new()) })
    }

    pub fn from_spec(spec: FieldSpec) -> Result<Self> {
        NoiseMode::new(AnalyticField::new(spec)?)
    }

    pub fn field(&self) -> &AnalyticField {
        &self.field
    }

    /// The sampled coefficient `ξ` with each component at its own location.
    pub fn xi(&self, grid: Grid) -> VectorField {
        self.field.to_field(grid)
    }

    /// `‖s ⊙ ξ‖_∞`.
    pub fn linf_scaled(&self, s: [f64; 3]) -> f64 {
        (0..3).fold(0.0, |m, c| m.max(s[c].abs() * self.linf[c]))
    }

    /// `‖s ⊙ ξ‖_{W^{1,∞}}`.
    pub fn w1inf_scaled(&self, s: [f64; 3]) -> f64 {
        (0..3).fold(0.0, |m, c| m.max(s[c].abs() * self.w1inf[c]))
    }

    fn cached(&self, grid: &Grid, c: usize, slot: usize, loc: Loc) -> Arc<Vec<f64>> {
        let key = ([grid.nx, grid.ny, grid.nz], c, slot, loc);
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return v.clone();
        }
        let mut orders = [0u8; 3];
        if slot < 3 {
            orders[slot] = 1;
        }
        let v = Arc::new(self.field.sample_at(grid, c, orders, loc));
        self.cache.write().expect("cache lock").entry(key).or_insert(v).clone()
    }
}

impl Coefficient for NoiseMode {
    fn sample(&self, grid: &Grid, c: usize, loc: Loc) -> Result<Arc<Vec<f64>>> {
        Ok(self.cached(grid, c, 3, loc))
    }

    fn sample_derivative(&self, grid: &Grid, c: usize, axis: usize, loc: Loc) -> Result<Arc<Vec<f64>>> {
        Ok(self.cached(grid, c, axis, loc))
    }

    fn plate_trace(&self, _grid: &Grid) -> Result<f64> {
        Ok(0.0)
    }

    fn component_is_zero(&self, c: usize) -> bool {
        self.field.component_is_empty(c)
    }
}

/// Finite family of correlation functions.
#[derive(Clone, Debug, Default)]
pub struct NoiseEnsemble {
    pub modes: Vec<NoiseMode>,
}

impl NoiseEnsemble {
    pub fn empty() -> Self {
        NoiseEnsemble { modes: Vec::new() }
    }

    pub fn from_specs(specs: &[FieldSpec]) -> Result<Self> {
        let modes = specs.iter().cloned().map(NoiseMode::from_spec).collect::<Result<_>>()?;
        Ok(NoiseEnsemble { modes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `Σ_i ‖ξ_i‖²_{W^{2,∞}}`.
    pub fn summability(&self) -> f64 {
        self.modes.iter().map(|m| m.w2inf_norm.powi(2)).sum()
    }

    pub fn specs(&self) -> Vec<FieldSpec> {
        self.modes.iter().map(|m| m.field.spec().clone()).collect()
    }
}

/// The four-mode default: two horizontal shears, one three-component mode
/// that is not divergence-free, and one vertically varying mode.
pub fn default_specs() -> Vec<FieldSpec> {
    vec![
        FieldSpec { u1: vec![Term::new(1.0, "1", "sin(1)", "1")], ..Default::default() },
        FieldSpec { u2: vec![Term::new(1.0, "cos(1)", "1", "1")], ..Default::default() },
        FieldSpec {
            u1: vec![Term::new(1.0, "cos(1)", "1", "1")],
            u2: vec![Term::new(1.0, "1", "sin(1)", "1")],
            u3: vec![Term::new(1.0, "1", "1", "sinpi(1)")],
        },
        FieldSpec {
            u1: vec![Term::new(1.0, "1", "cos(1)", "bump")],
            u3: vec![Term::new(1.0, "1", "cos(1)", "sinpi(1)")],
            ..Default::default()
        },
    ]
}

pub fn default_ensemble() -> NoiseEnsemble {
    NoiseEnsemble::from_specs(&default_specs()).expect("default ensemble is valid")
}

pub const UNIT: [f64; 3] = [1.0, 1.0, 1.0];
pub const HORIZONTAL: [f64; 3] = [1.0, 1.0, 0.0];
pub const VERTICAL: [f64; 3] = [0.0, 0.0, 1.0];

/// Scales of the effective coefficient `ξ̃ = (√ν_h ξ^1, √ν_h ξ^2, √ν_z ξ^3)`.
pub fn tilde_scales(visc: ViscosityPair) -> [f64; 3] {
    [visc.sqrt_nu_h(), visc.sqrt_nu_h(), visc.sqrt_nu_z()]
}

/// Sampled `(√ν_h ξ^h, √ν_z ξ^z, ξ̃)`.
pub fn split_scale(mode: &NoiseMode, visc: ViscosityPair, grid: Grid) -> (VectorField, VectorField, VectorField) {
    let xi = mode.xi(grid);
    let mut h = xi.scaled(visc.sqrt_nu_h());
    h.comps[2].fill(0.0);
    let mut z = xi.scaled(visc.sqrt_nu_z());
    z.comps[0].fill(0.0);
    z.comps[1].fill(0.0);
    let t = h.add(&z);
    (h, z, t)
}

fn check_grid<C: Coefficient + ?Sized>(phi: &C, f: &VectorField) -> Result<()> {
    // forces a grid check for sampled coefficients
    phi.plate_trace(&f.grid).map(|_| ())
}

fn active(phi: &(impl Coefficient + ?Sized), s: [f64; 3], j: usize) -> bool {
    s[j] != 0.0 && !phi.component_is_zero(j)
}

/// `Σ_j s_j φ^j ∂_j f`.
pub fn transport_with(phi: &(impl Coefficient + ?Sized), s: [f64; 3], f: &VectorField) -> Result<VectorField> {
    check_grid(phi, f)?;
    let g = f.grid;
    let mut out = VectorField::zeros(g);
    for l in 0..3 {
        let loc = Loc::of_component(l);
        for j in (0..3).filter(|&j| active(phi, s, j)) {
            let pj = phi.sample(&g, j, loc)?;
            let d = partial_component(&g, &f.comps[l], loc, j);
            for ((o, p), dv) in out.comps[l].iter_mut().zip(pj.iter()).zip(&d) {
                *o += s[j] * p * dv;
            }
        }
    }
    Ok(out)
}

fn comp_at(f: &VectorField, j: usize, loc: Loc) -> Vec<f64> {
    let from = Loc::of_component(j);
    if from == loc {
        f.comps[j].clone()
    } else {
        shift(&f.grid, &f.comps[j], from, loc)
    }
}

/// `Σ_j s_j f^j ∇φ^j`.
pub fn stretch_with(phi: &(impl Coefficient + ?Sized), s: [f64; 3], f: &VectorField) -> Result<VectorField> {
    check_grid(phi, f)?;
    let g = f.grid;
    let mut out = VectorField::zeros(g);
    for l in 0..3 {
        let loc = Loc::of_component(l);
        for j in (0..3).filter(|&j| active(phi, s, j)) {
            let fj = comp_at(f, j, loc);
            let dphi = phi.sample_derivative(&g, j, l, loc)?;
            for ((o, a), b) in out.comps[l].iter_mut().zip(&fj).zip(dphi.iter()) {
                *o += s[j] * a * b;
            }
        }
    }
    Ok(out)
}

/// `G f = L f + T f` for the scaled coefficient.
pub fn g_op_with(phi: &(impl Coefficient + ?Sized), s: [f64; 3], f: &VectorField) -> Result<VectorField> {
    let mut t = transport_with(phi, s, f)?;
    t.axpy(1.0, &stretch_with(phi, s, f)?);
    Ok(t)
}

/// `G* f = -L f - (div φ) f + L_f φ` for the scaled coefficient.
pub fn g_adjoint_with(phi: &(impl Coefficient + ?Sized), s: [f64; 3], f: &VectorField) -> Result<VectorField> {
    let g = f.grid;
    let trace = phi.plate_trace(&g)?;
    let scale = (0..3)
        .filter(|&j| active(phi, s, j))
        .map(|j| phi.sample(&g, j, Loc::of_component(j)).map(|v| v.iter().fold(0.0f64, |m, x| m.max(x.abs()))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    if s[2] != 0.0 && trace > 1e-12 * scale.max(1.0) {
        return Err(Error::PlateTrace(trace));
    }
    let mut out = transport_with(phi, s, f)?;
    out.scale(-1.0);
    for l in 0..3 {
        let loc = Loc::of_component(l);
        let n = g.len(loc);
        let mut div = vec![0.0; n];
        for j in (0..3).filter(|&j| active(phi, s, j)) {
            let d = phi.sample_derivative(&g, j, j, loc)?;
            for (a, b) in div.iter_mut().zip(d.iter()) {
                *a += s[j] * b;
            }
        }
        for ((o, dv), fl) in out.comps[l].iter_mut().zip(&div).zip(&f.comps[l]) {
            *o -= dv * fl;
        }
        if active(phi, s, l) {
            for j in 0..3 {
                let fj = comp_at(f, j, loc);
                let d = phi.sample_derivative(&g, l, j, loc)?;
                for ((o, a), b) in out.comps[l].iter_mut().zip(&fj).zip(d.iter()) {
                    *o += s[l] * a * b;
                }
            }
        }
    }
    Ok(out)
}

pub fn transport(phi: &(impl Coefficient + ?Sized), f: &VectorField) -> Result<VectorField> {
    transport_with(phi, UNIT, f)
}

pub fn stretch(phi: &(impl Coefficient + ?Sized), f: &VectorField) -> Result<VectorField> {
    stretch_with(phi, UNIT, f)
}

pub fn g_op(phi: &(impl Coefficient + ?Sized), f: &VectorField) -> Result<VectorField> {
    g_op_with(phi, UNIT, f)
}

pub fn g_adjoint(phi: &(impl Coefficient + ?Sized), f: &VectorField) -> Result<VectorField> {
    g_adjoint_with(phi, UNIT, f)
}

/// `|⟨G_φ f, h⟩ - ⟨f, G*_φ h⟩|`.
pub fn adjoint_residual(phi: &(impl Coefficient + ?Sized), f: &VectorField, h: &VectorField) -> Result<f64> {
    f.same_grid(h)?;
    let lhs = inner_unchecked(&g_op(phi, f)?, h);
    let rhs = inner_unchecked(f, &g_adjoint(phi, h)?);
    Ok((lhs - rhs).abs())
}

/// `P G̃_i u` for every mode.
pub fn projected_noise_terms(u: &VectorField, ens: &NoiseEnsemble, visc: ViscosityPair) -> Result<Vec<VectorField>> {
    let s = tilde_scales(visc);
    ens.modes.iter().map(|m| leray_project(&g_op_with(m, s, u)?)).collect()
}

/// `(1/2) Σ_i P G̃_i (P G̃_i u)` given the inner terms `P G̃_i u`.
pub fn corrector_from_terms(
    grid: Grid,
    ens: &NoiseEnsemble,
    visc: ViscosityPair,
    inner: &[VectorField],
) -> Result<VectorField> {
    if inner.len() != ens.len() {
        return Err(Error::IncrementLength { expected: ens.len(), got: inner.len() });
    }
    let s = tilde_scales(visc);
    let mut acc = VectorField::zeros(grid);
    if ens.is_empty() {
        return Ok(acc);
    }
    for (m, a) in ens.modes.iter().zip(inner) {
        acc.axpy(0.5, &g_op_with(m, s, a)?);
    }
    leray_project(&acc)
}

/// Itô–Stratonovich drift `(1/2) Σ_i P G̃_i P G̃_i u`, evaluated in the
/// three-weight split form
/// `ν_h/2 P G^h G^h + √(ν_h ν_z)/2 P (G^h G^z + G^z G^h) + ν_z/2 P G^z G^z`.
pub fn ito_corrector(u: &VectorField, ens: &NoiseEnsemble, visc: ViscosityPair) -> Result<VectorField> {
    let mut acc = VectorField::zeros(u.grid);
    if ens.is_empty() {
        return Ok(acc);
    }
    let (h, z) = (visc.nu_h, visc.nu_z);
    let hz = (h * z).sqrt();
    for m in &ens.modes {
        let a = leray_project(&g_op_with(m, HORIZONTAL, u)?)?;
        let b = leray_project(&g_op_with(m, VERTICAL, u)?)?;
        acc.axpy(0.5 * h, &g_op_with(m, HORIZONTAL, &a)?);
        acc.axpy(0.5 * hz, &g_op_with(m, HORIZONTAL, &b)?);
        acc.axpy(0.5 * hz, &g_op_with(m, VERTICAL, &a)?);
        acc.axpy(0.5 * z, &g_op_with(m, VERTICAL, &b)?);
    }
    leray_project(&acc)
}

/// Itô–Stratonovich drift in the compact form `(1/2) Σ_i P G̃_i (P G̃_i u)`.
pub fn ito_corrector_compact(u: &VectorField, ens: &NoiseEnsemble, visc: ViscosityPair) -> Result<VectorField> {
    if ens.is_empty() {
        return Ok(VectorField::zeros(u.grid));
    }
    let inner = projected_noise_terms(u, ens, visc)?;
    corrector_from_terms(u.grid, ens, visc, &inner)
}

/// `-Σ_i dW_i P G̃_i u`.
pub fn noise_increment(u: &VectorField, ens: &NoiseEnsemble, visc: ViscosityPair, dw: &[f64]) -> Result<VectorField> {
    if dw.len() != ens.len() {
        return Err(Error::IncrementLength { expected: ens.len(), got: dw.len() });
    }
    let mut acc = VectorField::zeros(u.grid);
    if dw.iter().all(|&d| d == 0.0) {
        return Ok(acc);
    }
    let s = tilde_scales(visc);
    for (m, &d) in ens.modes.iter().zip(dw) {
        if d != 0.0 {
            acc.axpy(-d, &g_op_with(m, s, u)?);
        }
    }
    leray_project(&acc)
}

/// Both sides of the cancellation estimates for one mode.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct KeyEstimateRow {
    /// `⟨G̃² f, f⟩ + ‖G̃ f‖²`.
    pub lhs: f64,
    /// `‖ξ̃‖²_{W^{1,∞}} ‖f‖²`.
    pub w1_term: f64,
    /// `‖ξ̃^h‖²_∞ Σ_{j=1,2} ‖∂_j f‖²`.
    pub h_term: f64,
    /// `‖ξ̃^z‖²_∞ ‖∂_3 f‖²`.
    pub z_term: f64,
    /// `⟨G̃ f, f⟩²`.
    pub square_lhs: f64,
    /// `‖ξ̃‖²_{W^{1,∞}} ‖f‖⁴`.
    pub square_rhs: f64,
    /// Smallest `c_δ` with `lhs ≤ c_δ w1_term + δ (h_term + z_term)`.
    pub c_delta: f64,
    /// Smallest `c` with `square_lhs ≤ c square_rhs`.
    pub c_square: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct KeyEstimateReport {
    pub delta: f64,
    pub rows: Vec<KeyEstimateRow>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

impl KeyEstimateReport {
    pub fn c_delta(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.c_delta))
    }

    pub fn c_square(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.c_square))
    }

    /// `true` if some mode violates either inequality with the given constants.
    pub fn violates(&self, c_delta: f64, c_square: f64) -> bool {
        self.rows.iter().any(|r| {
            r.lhs > c_delta * r.w1_term + self.delta * (r.h_term + r.z_term) || r.square_lhs > c_square * r.square_rhs
        })
    }
}

/// Evaluate the cancellation estimates for every mode on `f`.
pub fn key_estimate_report(
    ens: &NoiseEnsemble,
    visc: ViscosityPair,
    f: &VectorField,
    delta: f64,
) -> Result<KeyEstimateReport> {
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("delta must be positive, got {delta}")));
    }
    let s = tilde_scales(visc);
    let nf2 = l2_norm_sq(f);
    let dh = (0..2).map(|j| l2_norm_sq(&crate::calculus::partial(f, j))).sum::<f64>();
    let dz = l2_norm_sq(&crate::calculus::partial(f, 2));
    let mut rows = Vec::with_capacity(ens.len());
    for m in &ens.modes {
        let gf = g_op_with(m, s, f)?;
        let ggf = g_op_with(m, s, &gf)?;
        let lhs = inner_unchecked(&ggf, f) + l2_norm_sq(&gf);
        let w1 = m.w1inf_scaled(s).powi(2);
        let h_term = m.linf_scaled([s[0], s[1], 0.0]).powi(2) * dh;
        let z_term = m.linf_scaled([0.0, 0.0, s[2]]).powi(2) * dz;
        let w1_term = w1 * nf2;
        let square_lhs = inner_unchecked(&gf, f).powi(2);
        let square_rhs = w1 * nf2 * nf2;
        rows.push(KeyEstimateRow {
            lhs,
            w1_term,
            h_term,
            z_term,
            square_lhs,
            square_rhs,
            c_delta: ratio(lhs - delta * (h_term + z_term), w1_term),
            c_square: ratio(square_lhs, square_rhs),
        });
    }
    Ok(KeyEstimateReport { delta, rows })
}

/// Directional operator bounds for one mode.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DirectionalRow {
    /// `‖G̃^h f‖ + ‖G̃^{h,*} f‖`.
    pub h_lhs: f64,
    /// `‖ξ̃^h‖_{W^{1,∞}} (Σ_{j=1,2} ‖∂_j f‖ + ‖f‖)`.
    pub h_rhs: f64,
    /// `‖G̃^z f‖ + ‖G̃^{z,*} f‖`.
    pub z_lhs: f64,
    /// `‖ξ̃^z‖_{W^{1,∞}} (‖∂_3 f‖ + ‖f‖)`.
    pub z_rhs: f64,
    pub c_h: f64,
    pub c_z: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DirectionalReport {
    pub rows: Vec<DirectionalRow>,
}

impl DirectionalReport {
    pub fn c_max(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.c_h).max(r.c_z))
    }
}

pub fn directional_bounds_report(
    ens: &NoiseEnsemble,
    visc: ViscosityPair,
    f: &VectorField,
) -> Result<DirectionalReport> {
    let (sh, sz) = (visc.sqrt_nu_h(), visc.sqrt_nu_z());
    let hs = [sh, sh, 0.0];
    let zs = [0.0, 0.0, sz];
    let nf = l2_norm(f);
    let dh: f64 = (0..2).map(|j| crate::calculus::dir_seminorm(f, j)).sum();
    let dz = crate::calculus::dir_seminorm(f, 2);
    let mut rows = Vec::with_capacity(ens.len());
    for m in &ens.modes {
        let h_lhs = l2_norm(&g_op_with(m, hs, f)?) + l2_norm(&g_adjoint_with(m, hs, f)?);
        let z_lhs = l2_norm(&g_op_with(m, zs, f)?) + l2_norm(&g_adjoint_with(m, zs, f)?);
        let h_rhs = m.w1inf_scaled(hs) * (dh + nf);
        let z_rhs = m.w1inf_scaled(zs) * (dz + nf);
        rows.push(DirectionalRow { h_lhs, h_rhs, z_lhs, z_rhs, c_h: ratio(h_lhs, h_rhs), c_z: ratio(z_lhs, z_rhs) });
    }
    Ok(DirectionalReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::random_field;
    use crate::calculus::{divergence, inner_product};

    fn grid(n: usize) -> Grid {
        Grid::new(n, n, n).unwrap()
    }

    #[test]
    fn zero_coefficient_gives_zero() {
        let g = grid(8);
        let f = random_field(1, false).to_field(g);
        let phi = VectorField::zeros(g);
        assert_eq!(transport(&phi, &f).unwrap().max_abs(), 0.0);
        assert_eq!(stretch(&phi, &f).unwrap().max_abs(), 0.0);
        assert_eq!(g_op(&phi, &f).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn constant_field_only_stretches() {
        let g = grid(8);
        let phi = random_field(2, true);
        let c = [0.3, -1.2, 0.7];
        let f = VectorField::from_fn(g, |l, _| c[l]);
        assert!(transport(&phi, &f).unwrap().max_abs() < 1e-12);
        let expect = VectorField::from_fn(g, |l, p| (0..3).map(|j| c[j] * phi.partial(j, l, p)).sum());
        assert!(g_op(&phi, &f).unwrap().sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn g_is_transport_plus_stretch() {
        let g = grid(8);
        let phi = random_field(3, true);
        let f = random_field(4, false).to_field(g);
        let sum = transport(&phi, &f).unwrap().add(&stretch(&phi, &f).unwrap());
        assert_eq!(g_op(&phi, &f).unwrap(), sum);
    }

    #[test]
    fn split_scale_formula() {
        let spec = FieldSpec {
            u1: vec![Term::new(1.0, "1", "1", "1")],
            u3: vec![Term::new(1.0, "1", "1", "bump")],
            ..Default::default()
        };
        let m = NoiseMode::from_spec(spec).unwrap();
        let visc = ViscosityPair::new(0.04, 0.01).unwrap();
        let g = grid(8);
        let (h, z, t) = split_scale(&m, visc, g);
        let expect = VectorField::from_fn(g, |c, p| match c {
            0 => 0.2,
            2 => 0.1 * p[2] * (1.0 - p[2]),
            _ => 0.0,
        });
        assert!(t.sub(&expect).max_abs() < 1e-15);
        assert_eq!(h.comps[2].iter().fold(0.0f64, |a, b| a.max(b.abs())), 0.0);
        assert_eq!(z.comps[0].iter().fold(0.0f64, |a, b| a.max(b.abs())), 0.0);
        // isotropic: ξ̃ = √ν ξ
        let iso = ViscosityPair::new(0.09, 0.09).unwrap();
        let (_, _, t) = split_scale(&m, iso, g);
        assert!(t.sub(&m.xi(g).scaled(0.3)).max_abs() < 1e-15);
    }

    #[test]
    fn mode_with_plate_flux_rejected() {
        let spec = FieldSpec { u3: vec![Term::new(1.0, "1", "1", "cospi(1)")], ..Default::default() };
        assert!(matches!(NoiseMode::from_spec(spec), Err(Error::PlateTrace(_))));
        let g = grid(8);
        let mut phi = VectorField::zeros(g);
        phi.comps[2].fill(1.0);
        let f = random_field(5, false).to_field(g);
        assert!(matches!(g_adjoint(&phi, &f), Err(Error::PlateTrace(_))));
    }

    fn adjoint_residual(n: usize, seed: u64) -> f64 {
        let g = grid(n);
        let phi = random_field(seed, true);
        let f = random_field(seed + 1000, false).to_field(g);
        let h = random_field(seed + 2000, false).to_field(g);
        super::adjoint_residual(&phi, &f, &h).unwrap()
    }

    #[test]
    fn adjoint_second_order() {
        for seed in [7, 8] {
            let (a, b) = (adjoint_residual(16, seed), adjoint_residual(32, seed));
            assert!((a / b).log2() >= 1.9, "seed {seed}: {a} {b}");
        }
    }

    /// `L_f φ`
    fn lie(f: &VectorField, m: &NoiseMode) -> VectorField {
        let g = f.grid;
        let mut out = VectorField::zeros(g);
        for l in 0..3 {
            let loc = Loc::of_component(l);
            for j in 0..3 {
                let fj = comp_at(f, j, loc);
                let d = m.sample_derivative(&g, l, j, loc).unwrap();
                for ((o, a), b) in out.comps[l].iter_mut().zip(&fj).zip(d.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    #[test]
    fn divergence_free_coefficient_transport_is_antisymmetric() {
        // ξ_1 = (sin 2πy, 0, 0) is divergence-free
        let ens = default_ensemble();
        let m = &ens.modes[0];
        let err = |n: usize| {
            let g = grid(n);
            let f = random_field(9, true).to_field(g);
            let lf = transport(m, &f).unwrap();
            let l_adj = g_adjoint(m, &f).unwrap().sub(&lie(&f, m));
            (lf.add(&l_adj).max_abs(), inner_product(&lf, &f).unwrap().abs())
        };
        let (a16, q16) = err(16);
        assert!(a16 < 1e-12);
        let (_, q32) = err(32);
        assert!(q32 < q16 / 3.0, "{q16} {q32}");
    }

    #[test]
    fn ensemble_has_non_solenoidal_mode() {
        let ens = default_ensemble();
        assert_eq!(ens.len(), 4);
        assert!(ens.summability().is_finite());
        let g = grid(16);
        let div = divergence(&ens.modes[2].xi(g));
        assert!(div.l2_norm() > 0.1);
    }

    #[test]
    fn corrector_factorizations_agree() {
        let g = Grid::new(8, 8, 9).unwrap();
        let ens = default_ensemble();
        let u = leray_project(&random_field(11, true).to_field(g)).unwrap();
        for visc in [ViscosityPair::new(0.2, 0.05).unwrap(), ViscosityPair::new(0.1, 0.1).unwrap()] {
            let a = ito_corrector(&u, &ens, visc).unwrap();
            let b = ito_corrector_compact(&u, &ens, visc).unwrap();
            assert!(l2_norm(&a.sub(&b)) <= 1e-12 * l2_norm(&a), "{visc:?}");
        }
        assert_eq!(
            ito_corrector(&u, &NoiseEnsemble::empty(), ViscosityPair::new(0.1, 0.1).unwrap()).unwrap().max_abs(),
            0.0
        );
    }

    #[test]
    fn horizontal_modes_only_feel_nu_h() {
        let g = Grid::new(8, 8, 9).unwrap();
        let ens = NoiseEnsemble::from_specs(&default_specs()[..2]).unwrap();
        let u = leray_project(&random_field(12, true).to_field(g)).unwrap();
        let a = ito_corrector(&u, &ens, ViscosityPair::new(0.2, 0.05).unwrap()).unwrap();
        let b = ito_corrector(&u, &ens, ViscosityPair::new(0.2, 0.5).unwrap()).unwrap();
        assert!(l2_norm(&a.sub(&b)) <= 1e-14 * l2_norm(&a));
    }

    #[test]
    fn noise_increment_contract() {
        let g = Grid::new(8, 8, 9).unwrap();
        let ens = default_ensemble();
        let visc = ViscosityPair::new(0.2, 0.05).unwrap();
        let u = leray_project(&random_field(13, true).to_field(g)).unwrap();
        assert_eq!(noise_increment(&u, &ens, visc, &[0.0; 4]).unwrap().max_abs(), 0.0);
        assert!(matches!(noise_increment(&u, &ens, visc, &[0.0; 3]), Err(Error::IncrementLength { .. })));
        let one = noise_increment(&u, &ens, visc, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let direct = leray_project(&g_op_with(&ens.modes[0], tilde_scales(visc), &u).unwrap()).unwrap();
        assert!(l2_norm(&one.add(&direct)) < 1e-14 * l2_norm(&direct));
        let mixed = noise_increment(&u, &ens, visc, &[0.3, -0.1, 0.7, 0.2]).unwrap();
        assert!(divergence(&mixed).l2_norm() <= 1e-10 * l2_norm(&mixed));
    }

    #[test]
    fn reports_vanish_on_zero_field() {
        let g = Grid::new(8, 8, 9).unwrap();
        let ens = default_ensemble();
        let visc = ViscosityPair::new(0.2, 0.05).unwrap();
        let z = VectorField::zeros(g);
        let r = key_estimate_report(&ens, visc, &z, 0.1).unwrap();
        assert!(r.rows.iter().all(|row| row.lhs == 0.0 && row.square_lhs == 0.0));
        assert_eq!(directional_bounds_report(&ens, visc, &z).unwrap().c_max(), 0.0);
    }
}
