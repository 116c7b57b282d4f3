//! Two-plate boundary-layer corrector `𝓑 = 𝓜(z) 𝓐(x, y)`.
//!
//! Bottom copy, supported on `[0, 1/4]`:
//!
//! ```text
//! M^z(z) = -χ(z) z e^{-z/ε},   m = (M^z)',   ε = sqrt(θ ν_z)
//! 𝓑 = ( m a¹, m a², M^z a³ ),   a = (w¹, w², ∂_3 w³) at z = 0
//! ```
//!
//! with `χ = S(8(1/4 - z))`, `S` the septic smoothstep, so `χ ≡ 1` on
//! `[0, 1/8]` and `χ ≡ 0` from `1/4` on. `m(0) = -1` cancels the tangential
//! slip of `w`, `M^z(0) = 0` leaves the normal component alone, and
//! `∂_3 M^z = m` together with `∂_1 a¹ + ∂_2 a² + a³ = 0` makes `𝓑`
//! solenoidal. The top copy is the mirror image `z -> 1 - z` with the traces
//! of `w` at `z = 1` (its vertical component changes sign).

use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticField;
use crate::calculus::{divergence, l2_norm_sq, partial};
use crate::error::{Error, Result};
use crate::euler::{euler_rhs, EulerTrajectory};
use crate::field::VectorField;
use crate::grid::{Grid, Loc};
use crate::stats::loglog_slope;

/// `θ = c̃ ν_h`.
pub fn theta_rule(c_tilde: f64, nu_h: f64) -> f64 {
    c_tilde * nu_h
}

/// How the layer parameter `θ` is chosen at each viscosity level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaRule {
    /// `θ = c̃ ν_h`
    Proportional {
        c_tilde: f64,
    },
    Fixed {
        theta: f64,
    },
}

impl Default for ThetaRule {
    fn default() -> Self {
        ThetaRule::Proportional { c_tilde: 0.125 }
    }
}

impl ThetaRule {
    pub fn theta(&self, nu_h: f64) -> f64 {
        match *self {
            ThetaRule::Proportional { c_tilde } => theta_rule(c_tilde, nu_h),
            ThetaRule::Fixed { theta } => theta,
        }
    }

    fn coefficient(&self) -> f64 {
        match *self {
            ThetaRule::Proportional { c_tilde } => c_tilde,
            ThetaRule::Fixed { theta } => theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.coefficient();
        if c > 0.0 && c.is_finite() {
            Ok(())
        } else {
            Err(Error::Precondition(format!("theta rule coefficient must be positive, got {c}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectorProfile {
    pub eps: f64,
    pub theta: f64,
    pub nu_z: f64,
}

/// Septic smoothstep and its first two derivatives, clamped to `[0, 1]`.
fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let t2 = t * t;
    let t3 = t2 * t;
    let s = t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t3);
    let ds = 140.0 * t3 * (1.0 - t).powi(3);
    let d2s = 420.0 * t2 * (1.0 - t).powi(2) * (1.0 - 2.0 * t);
    (s, ds, d2s)
}

/// Cutoff `χ(z)` and derivatives.
fn cutoff(z: f64) -> (f64, f64, f64) {
    let (s, ds, d2s) = smoothstep(8.0 * (0.25 - z));
    (s, -8.0 * ds, 64.0 * d2s)
}

pub fn vertical_profile(theta: f64, nu_z: f64) -> Result<CorrectorProfile> {
    let tn = theta * nu_z;
    if !(theta > 0.0 && nu_z > 0.0 && tn <= 1.0 / 64.0) || !tn.is_finite() {
        return Err(Error::Precondition(format!(
            "theta * nu_z = {tn:e} must lie in (0, 1/64] to keep the layer inside its support"
        )));
    }
    Ok(CorrectorProfile { eps: tn.sqrt(), theta, nu_z })
}

/// Names and expected power-law exponents (in `θν_z`) of the profile norms.
pub const NORM_NAMES: [&str; 8] =
    ["M_L2", "z_dM_L2", "Mz_Linf", "z2_dM_Linf", "dM_L2", "M_Linf", "dMz_Linf", "M_plate"];
pub const NORM_EXPONENTS: [f64; 8] = [0.25, 0.25, 0.5, 0.5, -0.25, 0.0, 0.0, 0.0];

const GL_NODES: [f64; 4] =
    [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] =
    [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

impl CorrectorProfile {
    /// Bottom-copy `(M^z, m, m')` at `z`.
    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        if !(0.0..0.25).contains(&z) {
            return (0.0, 0.0, 0.0);
        }
        let (c, dc, d2c) = cutoff(z);
        let e = (-z / self.eps).exp();
        let g = z * e;
        let dg = (1.0 - z / self.eps) * e;
        let d2g = (z / self.eps - 2.0) / self.eps * e;
        (-c * g, -(dc * g + c * dg), -(d2c * g + 2.0 * dc * dg + c * d2g))
    }

    pub fn m(&self, z: f64) -> f64 {
        self.eval(z).1
    }

    pub fn mz(&self, z: f64) -> f64 {
        self.eval(z).0
    }

    pub fn dm(&self, z: f64) -> f64 {
        self.eval(z).2
    }

    /// Cell average of the bottom `m` over `[lo, hi]`.
    pub fn m_avg(&self, lo: f64, hi: f64) -> f64 {
        (self.mz(hi) - self.mz(lo)) / (hi - lo)
    }

    fn panels(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..=256).map(|j| 0.25 * j as f64 / 256.0).collect();
        let step = self.eps / 4.0;
        let mut z = step;
        while z < (60.0 * self.eps).min(0.25) {
            pts.push(z);
            z += step;
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Gauss-Legendre nodes and weights on `[0, 1/4]`, graded into the layer.
    fn quadrature(&self) -> Vec<(f64, f64)> {
        let pts = self.panels();
        let mut out = Vec::with_capacity(8 * pts.len());
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                out.push((mid - half * x, half * wt));
                out.push((mid + half * x, half * wt));
            }
        }
        out
    }

    /// `(∫ m², ∫ (M^z)²)` over the bottom support.
    pub fn l2_sq(&self) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for (z, w) in self.quadrature() {
            let (mz, m, _) = self.eval(z);
            a += w * m * m;
            b += w * mz * mz;
        }
        (a, b)
    }

    /// The eight norms of [`NORM_NAMES`], both copies included. `|𝓜|` is the
    /// Frobenius norm of `diag(m, m, M^z)`.
    pub fn norms(&self) -> [f64; 8] {
        let mut pts = self.quadrature();
        pts.extend(self.panels().into_iter().map(|z| (z, 0.0)));
        let (mut m_l2, mut zdm_l2, mut dm_l2) = (0.0, 0.0, 0.0);
        let (mut mz_inf, mut z2dm_inf, mut m_inf, mut dmz_inf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (z, w) in pts {
            let (mz, m, dm) = self.eval(z);
            let big = 2.0 * m * m + mz * mz;
            let dbig = 2.0 * dm * dm + m * m;
            m_l2 += w * big;
            zdm_l2 += w * z * z * dbig;
            dm_l2 += w * dbig;
            mz_inf = mz_inf.max(mz.abs());
            z2dm_inf = z2dm_inf.max(z * z * dbig.sqrt());
            m_inf = m_inf.max(big.sqrt());
            dmz_inf = dmz_inf.max(m.abs());
        }
        let (mz0, m0, _) = self.eval(0.0);
        [
            (2.0 * m_l2).sqrt(),
            2.0 * zdm_l2.sqrt(),
            mz_inf,
            2.0 * z2dm_inf,
            (2.0 * dm_l2).sqrt(),
            m_inf,
            dmz_inf,
            (2.0 * m0 * m0 + mz0 * mz0).sqrt(),
        ]
    }
}

/// One `(θν_z, norm, value)` sample of a profile sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub theta_nu_z: f64,
    pub norm_name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub norm_name: String,
    pub expected: f64,
    pub fitted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeTable {
    pub samples: Vec<NormSample>,
    pub slopes: Vec<SlopeRow>,
}

impl SlopeTable {
    pub fn max_deviation(&self) -> f64 {
        self.slopes.iter().map(|r| (r.fitted - r.expected).abs()).fold(0.0, f64::max)
    }
}

/// Fit every profile norm against `θν_z` (with `θ = 1`).
pub fn profile_slopes(theta_nu_z: &[f64]) -> Result<SlopeTable> {
    if theta_nu_z.len() < 2 {
        return Err(Error::Precondition("need at least two values of theta * nu_z".into()));
    }
    let norms = theta_nu_z.iter().map(|&t| vertical_profile(1.0, t).map(|p| p.norms())).collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::new();
    for (t, ns) in theta_nu_z.iter().zip(&norms) {
        for (name, v) in NORM_NAMES.iter().zip(ns) {
            samples.push(NormSample { theta_nu_z: *t, norm_name: name.to_string(), value: *v });
        }
    }
    let slopes = (0..8)
        .map(|i| {
            let ys: Vec<f64> = norms.iter().map(|n| n[i]).collect();
            SlopeRow {
                norm_name: NORM_NAMES[i].to_string(),
                expected: NORM_EXPONENTS[i],
                fitted: loglog_slope(theta_nu_z, &ys),
            }
        })
        .collect();
    Ok(SlopeTable { samples, slopes })
}

/// `n` values of `θν_z` log-spaced over `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// `(a¹, a², a³)` on one plate. `a1` sits at the horizontal placement of
/// `U`, `a2` at `V`, `a3` at cell centres; each has `nx * ny` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateTrace {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub a3: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceData {
    pub grid: Grid,
    pub a_bot: PlateTrace,
    pub a_top: PlateTrace,
}

/// Quadratic extrapolation of a centred column to the plate.
fn extrapolate(f0: f64, f1: f64, f2: f64) -> f64 {
    (15.0 * f0 - 10.0 * f1 + 3.0 * f2) / 8.0
}

fn plane_trace(grid: &Grid, data: &[f64], top: bool) -> Vec<f64> {
    let p = grid.plane();
    let nz = grid.nz;
    let ks = if top { [nz - 1, nz - 2, nz - 3] } else { [0, 1, 2] };
    (0..p).map(|q| extrapolate(data[ks[0] * p + q], data[ks[1] * p + q], data[ks[2] * p + q])).collect()
}

/// `-(δ_x a¹ + δ_y a²)` at cell centres.
fn trace_a3(grid: &Grid, a1: &[f64], a2: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let dx = (a1[j * nx + (i + 1) % nx] - a1[j * nx + i]) / grid.hx;
            let dy = (a2[((j + 1) % ny) * nx + i] - a2[j * nx + i]) / grid.hy;
            out[j * nx + i] = -(dx + dy);
        }
    }
    out
}

impl PlateTrace {
    fn from_field(w: &VectorField, top: bool) -> PlateTrace {
        let g = w.grid;
        let a1 = plane_trace(&g, &w.comps[0], top);
        let a2 = plane_trace(&g, &w.comps[1], top);
        let a3 = trace_a3(&g, &a1, &a2);
        PlateTrace { a1, a2, a3 }
    }

    fn from_analytic(w: &AnalyticField, grid: &Grid, z: f64) -> PlateTrace {
        let sample = |c: usize, orders: [u8; 3]| -> Vec<f64> {
            let cen = Loc::of_component(c).centred();
            let mut out = Vec::with_capacity(grid.plane());
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let p = [grid.coord(0, cen[0], i), grid.coord(1, cen[1], j), z];
                    out.push(w.derivative(c, orders, p));
                }
            }
            out
        };
        PlateTrace { a1: sample(0, [0, 0, 0]), a2: sample(1, [0, 0, 0]), a3: sample(2, [0, 0, 1]) }
    }

    fn is_zero(&self) -> bool {
        [&self.a1, &self.a2, &self.a3].iter().all(|v| v.iter().all(|x| *x == 0.0))
    }
}

/// Plate traces of `w`: tangential components by one-sided extrapolation,
/// `a³` from the incompressibility relation.
pub fn trace_data(w: &VectorField) -> TraceData {
    TraceData { grid: w.grid, a_bot: PlateTrace::from_field(w, false), a_top: PlateTrace::from_field(w, true) }
}

/// Exact traces of a closed-form field, sampled at the grid's horizontal points.
pub fn analytic_trace_data(w: &AnalyticField, grid: Grid) -> TraceData {
    TraceData { grid, a_bot: PlateTrace::from_analytic(w, &grid, 0.0), a_top: PlateTrace::from_analytic(w, &grid, 1.0) }
}

impl TraceData {
    /// Largest gap between `a³` and a one-sided difference of `w³` at the
    /// plates (second order in `h_z`).
    pub fn relation_residual(&self, w: &VectorField) -> f64 {
        let g = self.grid;
        let p = g.plane();
        let w3 = &w.comps[2];
        let nz = g.nz;
        let s = 0.5 / g.hz;
        let mut r = 0.0f64;
        for q in 0..p {
            let bot = s * (-3.0 * w3[q] + 4.0 * w3[p + q] - w3[2 * p + q]);
            let top = s * (3.0 * w3[nz * p + q] - 4.0 * w3[(nz - 1) * p + q] + w3[(nz - 2) * p + q]);
            r = r.max((bot - self.a_bot.a3[q]).abs()).max((top - self.a_top.a3[q]).abs());
        }
        r
    }

    /// `‖a‖_{L∞_h}` summed over both plates.
    pub fn linf(&self) -> f64 {
        [&self.a_bot, &self.a_top]
            .iter()
            .map(|t| [&t.a1, &t.a2, &t.a3].iter().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.abs())))
            .sum()
    }

    fn plane_l2(&self, v: &[f64]) -> f64 {
        (self.grid.hx * self.grid.hy * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    /// `‖a‖_{L²_h}` summed over both plates.
    pub fn l2(&self) -> f64 {
        [&self.a_bot, &self.a_top]
            .iter()
            .map(|t| {
                let s: f64 = [&t.a1, &t.a2, &t.a3].iter().map(|v| self.plane_l2(v).powi(2)).sum();
                s.sqrt()
            })
            .sum()
    }

    /// `Σ_j ‖∂_j a‖_{L²_h}` summed over both plates (central differences).
    pub fn grad_l2(&self) -> f64 {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let d = |v: &[f64], axis: usize| -> Vec<f64> {
            let mut out = vec![0.0; nx * ny];
            for j in 0..ny {
                for i in 0..nx {
                    out[j * nx + i] = if axis == 0 {
                        (v[j * nx + (i + 1) % nx] - v[j * nx + (i + nx - 1) % nx]) / (2.0 * g.hx)
                    } else {
                        (v[((j + 1) % ny) * nx + i] - v[((j + ny - 1) % ny) * nx + i]) / (2.0 * g.hy)
                    };
                }
            }
            out
        };
        let mut total = 0.0;
        for t in [&self.a_bot, &self.a_top] {
            for axis in 0..2 {
                let s: f64 = [&t.a1, &t.a2, &t.a3].iter().map(|v| self.plane_l2(&d(v, axis)).powi(2)).sum();
                total += s.sqrt();
            }
        }
        total
    }
}

/// Sample `𝓑` on the grid. Horizontal components use the cell average of
/// `m`, so the discrete divergence of `𝓑` vanishes up to round-off.
pub fn build_from_traces(t: &TraceData, profile: &CorrectorProfile) -> VectorField {
    let g = t.grid;
    let p = g.plane();
    let mut b = VectorField::zeros(g);
    if t.a_bot.is_zero() && t.a_top.is_zero() {
        return b;
    }
    for k in 0..g.nz {
        let (lo, hi) = (k as f64 * g.hz, (k + 1) as f64 * g.hz);
        let mb = profile.m_avg(lo, hi);
        // mirror: average of m(1 - z) over [lo, hi]
        let mt = (profile.mz(1.0 - lo) - profile.mz(1.0 - hi)) / (hi - lo);
        if mb == 0.0 && mt == 0.0 {
            continue;
        }
        for c in 0..2 {
            let (ab, at) = if c == 0 { (&t.a_bot.a1, &t.a_top.a1) } else { (&t.a_bot.a2, &t.a_top.a2) };
            for q in 0..p {
                b.comps[c][k * p + q] = mb * ab[q] + mt * at[q];
            }
        }
    }
    for k in 0..=g.nz {
        let z = k as f64 * g.hz;
        let (zb, zt) = (profile.mz(z), -profile.mz(1.0 - z));
        if zb == 0.0 && zt == 0.0 {
            continue;
        }
        for q in 0..p {
            b.comps[2][k * p + q] = zb * t.a_bot.a3[q] + zt * t.a_top.a3[q];
        }
    }
    b
}

/// `𝓑` for the Euler state `w`.
pub fn build_corrector(w: &VectorField, profile: &CorrectorProfile) -> VectorField {
    build_from_traces(&trace_data(w), profile)
}

/// Continuum `‖𝓑‖²_{L²}`: the product of the exact profile integrals and
/// the horizontal trace norms (the copies have disjoint support).
pub fn corrector_l2_sq(t: &TraceData, profile: &CorrectorProfile) -> f64 {
    let (mm, zz) = profile.l2_sq();
    let mut total = 0.0;
    for a in [&t.a_bot, &t.a_top] {
        total += mm * (t.plane_l2(&a.a1).powi(2) + t.plane_l2(&a.a2).powi(2));
        total += zz * t.plane_l2(&a.a3).powi(2);
    }
    total
}

/// `𝓑` built from a closed-form field, evaluated pointwise in the continuum.
#[derive(Clone, Debug)]
pub struct AnalyticCorrector<'a> {
    pub w: &'a AnalyticField,
    pub profile: CorrectorProfile,
}

impl AnalyticCorrector<'_> {
    pub fn value(&self, c: usize, p: [f64; 3]) -> f64 {
        let [x, y, z] = p;
        let pr = &self.profile;
        if c < 2 {
            pr.m(z) * self.w.value(c, [x, y, 0.0]) + pr.m(1.0 - z) * self.w.value(c, [x, y, 1.0])
        } else {
            pr.mz(z) * self.w.derivative(2, [0, 0, 1], [x, y, 0.0])
                - pr.mz(1.0 - z) * self.w.derivative(2, [0, 0, 1], [x, y, 1.0])
        }
    }
}

/// Largest plate value of `w + 𝓑`: tangential components by extrapolation,
/// the normal component read off the plate faces.
pub fn plate_trace_residual(f: &VectorField) -> f64 {
    let g = f.grid;
    let p = g.plane();
    let mut r = 0.0f64;
    for c in 0..2 {
        for top in [false, true] {
            r = r.max(plane_trace(&g, &f.comps[c], top).iter().fold(0.0f64, |m, x| m.max(x.abs())));
        }
    }
    r.max(f.normal_trace_max())
        .max(f.comps[2][..p].iter().chain(&f.comps[2][g.nz * p..]).fold(0.0f64, |m, x| m.max(x.abs())))
}

/// `‖div 𝓑‖_{L²}`.
pub fn corrector_divergence(b: &VectorField) -> f64 {
    divergence(b).l2_norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardyNorm {
    L2,
    Linf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyRecord {
    pub norm: HardyNorm,
    /// `‖f/z‖ + ‖f/(1-z)‖`
    pub lhs: f64,
    /// `‖∂_3 f‖`
    pub rhs: f64,
    pub ratio: f64,
}

/// Both sides of the Hardy inequality by staggered quadrature. Plate-level
/// samples of the vertical component are skipped, so the weights `1/z` and
/// `1/(1-z)` are never evaluated at the plates.
pub fn hardy_check(f: &VectorField, norm: HardyNorm) -> Result<HardyRecord> {
    let g = f.grid;
    let p = g.plane();
    let scale = f.max_abs();
    let mut trace = 0.0f64;
    for c in 0..2 {
        for top in [false, true] {
            trace = trace.max(plane_trace(&g, &f.comps[c], top).iter().fold(0.0f64, |m, x| m.max(x.abs())));
        }
    }
    let trace = trace.max(f.normal_trace_max());
    if trace > scale * g.hz * g.hz {
        return Err(Error::Precondition(format!("field does not vanish on the plates (trace {trace:e})")));
    }
    let df = partial(f, 2);
    let (mut lhs_b, mut lhs_t, mut rhs) = (0.0f64, 0.0f64, 0.0f64);
    for c in 0..3 {
        let loc = Loc::of_component(c);
        let cen = loc.centred()[2];
        for k in 0..g.nz_at(loc) {
            let z = g.coord(2, cen, k);
            let w = g.weight(loc, k);
            let row = &f.comps[c][k * p..(k + 1) * p];
            let drow = &df.comps[c][k * p..(k + 1) * p];
            match norm {
                HardyNorm::L2 => rhs += w * drow.iter().map(|v| v * v).sum::<f64>(),
                HardyNorm::Linf => rhs = drow.iter().fold(rhs, |m, v| m.max(v.abs())),
            }
            if z <= 0.0 || z >= 1.0 {
                continue;
            }
            for v in row {
                let (b, t) = (v / z, v / (1.0 - z));
                match norm {
                    HardyNorm::L2 => {
                        lhs_b += w * b * b;
                        lhs_t += w * t * t;
                    }
                    HardyNorm::Linf => {
                        lhs_b = lhs_b.max(b.abs());
                        lhs_t = lhs_t.max(t.abs());
                    }
                }
            }
        }
    }
    let (lhs, rhs) = match norm {
        HardyNorm::L2 => (lhs_b.sqrt() + lhs_t.sqrt(), rhs.sqrt()),
        HardyNorm::Linf => (lhs_b + lhs_t, rhs),
    };
    Ok(HardyRecord { norm, lhs, rhs, ratio: lhs / rhs })
}

/// Trace norms of one Euler state, against a Sobolev-type proxy of the state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceBoundsRow {
    pub time: f64,
    pub a_linf: f64,
    pub a_grad_l2: f64,
    pub a_dt_l2: f64,
    /// `(‖w‖² + Σ‖∂w‖² + Σ‖∂∂w‖²)^{1/2}`
    pub proxy: f64,
    /// `(a_linf + a_grad_l2 + a_dt_l2) / (proxy + proxy²)`
    pub ratio: f64,
}

pub fn trace_bounds(w: &VectorField, time: f64) -> Result<TraceBoundsRow> {
    let t = trace_data(w);
    let dt = trace_data(&euler_rhs(w)?);
    let mut s = l2_norm_sq(w);
    for a in 0..3 {
        let d = partial(w, a);
        s += l2_norm_sq(&d);
        for b in a..3 {
            s += l2_norm_sq(&partial(&d, b));
        }
    }
    let proxy = s.sqrt();
    let (a_linf, a_grad_l2, a_dt_l2) = (t.linf(), t.grad_l2(), dt.l2());
    let ratio = (a_linf + a_grad_l2 + a_dt_l2) / (proxy + proxy * proxy);
    Ok(TraceBoundsRow { time, a_linf, a_grad_l2, a_dt_l2, proxy, ratio })
}

/// [`trace_bounds`] at every stored state of an Euler trajectory.
pub fn trace_bounds_report(traj: &EulerTrajectory) -> Result<Vec<TraceBoundsRow>> {
    traj.states.iter().zip(&traj.times).map(|(w, &t)| trace_bounds(w, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{random_field, FieldSpec, Term};
    use crate::euler::{default_initial_spec, initial_state};
    use std::f64::consts::PI;

    #[test]
    fn profile_endpoints_and_support() {
        let p = vertical_profile(1.0, 1e-4).unwrap();
        let (mz, m, _) = p.eval(0.0);
        assert_eq!(m, -1.0);
        assert_eq!(mz, 0.0);
        for z in [0.25, 0.3, 0.9, 1.0, -0.1] {
            assert_eq!(p.eval(z), (0.0, 0.0, 0.0));
        }
        assert!(vertical_profile(1.0, 1.0 / 32.0).is_err());
        assert!(vertical_profile(0.0, 1e-3).is_err());
        assert!(vertical_profile(1.0, 1.0 / 64.0).is_ok());
    }

    #[test]
    fn profile_derivatives_match_differences() {
        let p = vertical_profile(1.0, 1.0 / 400.0).unwrap();
        let h = 1e-6;
        for z in [0.01, 0.05, 0.13, 0.2, 0.24] {
            let (_, m, dm) = p.eval(z);
            let fd_m = (p.mz(z + h) - p.mz(z - h)) / (2.0 * h);
            let fd_dm = (p.m(z + h) - p.m(z - h)) / (2.0 * h);
            assert!((fd_m - m).abs() < 1e-7, "{z}");
            assert!((fd_dm - dm).abs() < 1e-5 * (1.0 + dm.abs()), "{z}");
        }
    }

    #[test]
    fn smoothstep_is_c3_at_the_joins() {
        let (s0, d0, dd0) = smoothstep(1e-9);
        let (s1, d1, dd1) = smoothstep(1.0 - 1e-9);
        assert!(s0.abs() < 1e-30 && d0.abs() < 1e-20 && dd0.abs() < 1e-10);
        assert!((s1 - 1.0).abs() < 1e-12 && d1.abs() < 1e-20 && dd1.abs() < 1e-10);
    }

    #[test]
    fn l2_profile_oracle() {
        // inside the layer the cutoff is invisible: ∫ (1 - z/ε)² e^{-2z/ε} = ε/4
        let p = vertical_profile(1.0, 1e-8).unwrap();
        let (mm, zz) = p.l2_sq();
        assert!((mm / (p.eps / 4.0) - 1.0).abs() < 1e-9, "{mm}");
        // ∫ z² e^{-2z/ε} = ε³/4
        assert!((zz / p.eps.powi(3) * 4.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn slopes_over_four_decades() {
        let t = profile_slopes(&log_space(1e-9, 1e-5, 9)).unwrap();
        for r in &t.slopes {
            assert!((r.fitted - r.expected).abs() < 0.03, "{r:?}");
        }
        assert_eq!(t.samples.len(), 72);
    }

    fn shear_like() -> AnalyticField {
        // w = (sin 2πy s(z), 0, 0), s(z) = cos²(πz/2)
        AnalyticField::new(FieldSpec {
            u1: vec![Term::new(0.5, "1", "sin(1)", "1"), Term::new(0.5, "1", "sin(1)", "cospi(1)")],
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn trace_of_shear_like_field() {
        let g = Grid::new(16, 16, 32).unwrap();
        let w = shear_like().to_field(g);
        let t = trace_data(&w);
        for j in 0..16 {
            let y = (j as f64 + 0.5) / 16.0;
            for i in 0..16 {
                assert!((t.a_bot.a1[j * 16 + i] - (2.0 * PI * y).sin()).abs() < 2e-4);
                assert!(t.a_top.a1[j * 16 + i].abs() < 2e-4);
            }
        }
        assert!(t.a_bot.a3.iter().chain(&t.a_top.a3).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn steady_shear_has_no_normal_derivative_trace() {
        let g = Grid::new(8, 8, 16).unwrap();
        let w = VectorField::from_fn(g, |c, p| if c == 0 { (PI * p[2]).cos() } else { 0.0 });
        let t = trace_data(&w);
        assert!(t.a_bot.a3.iter().chain(&t.a_top.a3).all(|v| *v == 0.0));
    }

    #[test]
    fn trace_relation_is_second_order() {
        let res = |n: usize| {
            let g = Grid::new(n, n, n).unwrap();
            let w = initial_state(&default_initial_spec(), g).unwrap();
            trace_data(&w).relation_residual(&w)
        };
        let (a, b) = (res(16), res(32));
        assert!(a / b > 3.0, "{a} {b}");
    }

    #[test]
    fn zero_traces_give_zero_corrector() {
        let g = Grid::new(8, 8, 16).unwrap();
        let w = VectorField::from_fn(
            g,
            |c, p| {
                if c == 0 {
                    (PI * p[2]).sin().powi(2) * (2.0 * PI * p[1]).sin()
                } else {
                    0.0
                }
            },
        );
        let mut t = trace_data(&w);
        let p = vertical_profile(1.0, 1e-3).unwrap();
        assert!(build_from_traces(&t, &p).max_abs() < 1e-2);
        for v in [&mut t.a_bot, &mut t.a_top] {
            v.a1.iter_mut().chain(v.a2.iter_mut()).chain(v.a3.iter_mut()).for_each(|x| *x = 0.0);
        }
        assert_eq!(build_from_traces(&t, &p).max_abs(), 0.0);
    }

    #[test]
    fn continuum_no_slip_with_analytic_traces() {
        let w = random_field(5, true);
        let b = AnalyticCorrector { w: &w, profile: vertical_profile(1.0, 1e-4).unwrap() };
        let scale = w.winf_norm(0);
        for s in 0..20 {
            let x = 0.37 * s as f64 % 1.0;
            let y = 0.61 * s as f64 % 1.0;
            for z in [0.0, 1.0] {
                for c in 0..3 {
                    let r = w.value(c, [x, y, z]) + b.value(c, [x, y, z]);
                    assert!(r.abs() <= 1e-8 * scale, "{c} {z} {r}");
                }
            }
        }
    }

    #[test]
    fn discrete_corrector_is_solenoidal_and_repairs_slip() {
        let p = vertical_profile(1.0, 1.0 / 64.0).unwrap();
        let mut prev = f64::INFINITY;
        for n in [16, 32, 64] {
            let g = Grid::new(16, 16, n).unwrap();
            let w = initial_state(&default_initial_spec(), g).unwrap();
            let b = build_corrector(&w, &p);
            assert!(corrector_divergence(&b) < 1e-11 * b.max_abs());
            let r = plate_trace_residual(&w.add(&b));
            assert!(r < prev, "{n} {r}");
            prev = r;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn corrector_norm_slope() {
        let g = Grid::new(16, 16, 17).unwrap();
        let w = initial_state(&default_initial_spec(), g).unwrap();
        let t = trace_data(&w);
        let xs = log_space(1e-8, 1e-4, 5);
        let ys: Vec<f64> =
            xs.iter().map(|&tn| corrector_l2_sq(&t, &vertical_profile(1.0, tn).unwrap()).sqrt()).collect();
        let s = loglog_slope(&xs, &ys);
        assert!((s - 0.25).abs() < 0.05, "{s}");
    }

    #[test]
    fn hardy_closed_forms() {
        let g = Grid::new(4, 4, 64).unwrap();
        let f = VectorField::from_fn(g, |c, p| if c == 2 { (PI * p[2]).sin() } else { 0.0 });
        let r = hardy_check(&f, HardyNorm::Linf).unwrap();
        assert!(r.ratio < 2.0 + 1e-2 && r.ratio > 1.9, "{r:?}");
        // ∫_0^1 sin²(πz)/z² dz by composite Simpson
        let n = 200_000;
        let hh = 1.0 / n as f64;
        let f2 = |z: f64| if z == 0.0 { PI * PI } else { ((PI * z).sin() / z).powi(2) };
        let mut s = f2(0.0) + f2(1.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f2(i as f64 * hh);
        }
        let oracle = 2.0 * (s * hh / 3.0).sqrt() / (PI / 2f64.sqrt());
        let r2 = hardy_check(&f, HardyNorm::L2).unwrap();
        assert!((r2.ratio / oracle - 1.0).abs() < 0.02, "{} {oracle}", r2.ratio);

        let q = VectorField::from_fn(g, |c, p| if c == 0 { p[2] * (1.0 - p[2]) } else { 0.0 });
        let rq = hardy_check(&q, HardyNorm::Linf).unwrap();
        // staggered samples stop half a cell short of the plates
        assert!((rq.lhs - 2.0).abs() < 0.02 && (rq.rhs - 1.0).abs() <= g.hz, "{rq:?}");
        assert!((rq.ratio - 2.0).abs() < 0.02);
    }

    #[test]
    fn hardy_rejects_slip_and_is_stable() {
        let g = Grid::new(4, 4, 32).unwrap();
        let f = VectorField::from_fn(g, |c, p| if c == 1 { 1.0 + p[2] } else { 0.0 });
        assert!(hardy_check(&f, HardyNorm::L2).is_err());
        let ratio = |n: usize, norm| {
            let g = Grid::new(8, 8, n).unwrap();
            let f = VectorField::from_fn(g, |c, p| {
                let b = (PI * p[2]).sin().powi(2) * (2.0 * PI * p[0]).cos();
                if c < 2 {
                    b
                } else {
                    0.0
                }
            });
            hardy_check(&f, norm).unwrap().ratio
        };
        for norm in [HardyNorm::L2, HardyNorm::Linf] {
            let (a, b) = (ratio(32, norm), ratio(64, norm));
            assert!((a / b - 1.0).abs() < 0.05, "{norm:?} {a} {b}");
        }
    }

    #[test]
    fn trace_bounds_are_finite_along_euler() {
        use crate::euler::{run_euler, EulerConfig};
        let g = Grid::new(16, 16, 17).unwrap();
        let w0 = initial_state(&default_initial_spec(), g).unwrap();
        let traj = run_euler(&w0, &EulerConfig { dt: 5e-3, horizon: 0.1, sample_every: 5 }).unwrap();
        let rows = trace_bounds_report(&traj).unwrap();
        assert_eq!(rows.len(), traj.states.len());
        for r in &rows {
            assert!(r.ratio.is_finite() && r.ratio > 0.0 && r.ratio < 10.0, "{r:?}");
        }
    }
}
