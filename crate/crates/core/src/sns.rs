//! Time stepping of the anisotropic stochastic Navier-Stokes system
//!
//! ```text
//! du = [-B(u,u) - ν_h A_h u - ν_z A_z u + (1/2) Σ_i P G̃_i P G̃_i u] dt - Σ_i P G̃_i u dW_i
//! ```
//!
//! with no-slip plates. Advection, the Itô drift and the noise are explicit;
//! the anisotropic viscous term is implicit.

use serde::{Deserialize, Serialize};

use crate::advection::nonlinear_term;
use crate::calculus::{divergence, inner_unchecked, l2_norm, l2_norm_sq, strip_integral};
use crate::corrector::{build_corrector, corrector_l2_sq, trace_data, CorrectorProfile};
use crate::error::{Error, Result};
use crate::euler::{cfl_limit, step_count, EulerTrajectory};
use crate::field::VectorField;
use crate::noise::{corrector_from_terms, projected_noise_terms, NoiseEnsemble};
use crate::projection::{dissipation, leray_project, viscous_solve, ViscosityPair};
use crate::rng::BrownianStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ItoSemiImplicit,
    StratonovichHeun,
}

#[derive(Clone, Debug)]
pub struct SnsParams {
    pub visc: ViscosityPair,
    pub ens: NoiseEnsemble,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub stream: u64,
    /// Include the Itô drift. Only switched off for ablation studies.
    pub ito_correction: bool,
    /// Each step's increment is the sum of this many increments of the
    /// stream at step `dt / substeps`, so runs with different `dt` can share
    /// one Brownian path.
    pub substeps: u64,
    /// Strip width for the boundary-layer dissipation diagnostics.
    pub kato_delta: f64,
    /// Keep every `snapshot_every`-th state (0 keeps none).
    pub snapshot_every: usize,
}

impl SnsParams {
    pub fn new(visc: ViscosityPair, ens: NoiseEnsemble, dt: f64, horizon: f64) -> Self {
        SnsParams {
            visc,
            ens,
            dt,
            horizon,
            scheme: Scheme::ItoSemiImplicit,
            seed: 0,
            stream: 0,
            ito_correction: true,
            substeps: 1,
            kato_delta: kato_delta(visc.nu_z),
            snapshot_every: 0,
        }
    }

    pub fn brownian(&self) -> BrownianStream {
        BrownianStream::new(self.seed, self.stream, self.ens.len())
    }

    /// Increments for step `step`.
    pub fn increments(&self, stream: &BrownianStream, step: u64) -> Vec<f64> {
        stream.coarse_increments(step, self.substeps.max(1), self.dt / self.substeps.max(1) as f64)
    }
}

/// Default strip width `√ν_z`, capped at `1/4`.
pub fn kato_delta(nu_z: f64) -> f64 {
    nu_z.sqrt().min(0.25)
}

/// Pieces of one step, kept for the energy ledger.
#[derive(Clone, Debug)]
pub struct StepParts {
    pub state: VectorField,
    /// Explicit drift `F` (advection and Itô drift).
    pub drift: VectorField,
    /// Effective noise increment `N`.
    pub noise: VectorField,
}

fn check_cfl(u: &VectorField, dt: f64) -> Result<()> {
    let limit = cfl_limit(u);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::Cfl { dt, limit });
    }
    Ok(())
}

fn advective_drift(u: &VectorField) -> Result<VectorField> {
    let mut f = nonlinear_term(u, u)?;
    f.scale(-1.0);
    Ok(f)
}

/// `P (I - dt L)^{-1} u*`.
fn implicit_finish(ustar: &VectorField, visc: ViscosityPair, dt: f64) -> Result<VectorField> {
    ustar.ensure_finite("explicit stage")?;
    let out = leray_project(&viscous_solve(ustar, visc, dt)?)?;
    out.ensure_finite("state")?;
    Ok(out)
}

fn explicit_stage(u: &VectorField, dt: f64, drift: &VectorField, noise: &VectorField, has_noise: bool) -> VectorField {
    let mut ustar = u.clone();
    ustar.axpy(dt, drift);
    if has_noise {
        ustar.axpy(1.0, noise);
    }
    ustar
}

/// Deterministic anisotropic Navier-Stokes step.
pub fn step_deterministic(u: &VectorField, visc: ViscosityPair, dt: f64) -> Result<VectorField> {
    check_cfl(u, dt)?;
    let drift = advective_drift(u)?;
    let mut ustar = u.clone();
    ustar.axpy(dt, &drift);
    implicit_finish(&ustar, visc, dt)
}

/// `-Σ_i dW_i P G̃_i u` from the precomputed terms `P G̃_i u`.
fn noise_from_terms(u: &VectorField, inner: &[VectorField], dw: &[f64]) -> Result<VectorField> {
    if inner.len() != dw.len() {
        return Err(Error::IncrementLength { expected: inner.len(), got: dw.len() });
    }
    let mut acc = VectorField::zeros(u.grid);
    for (t, &d) in inner.iter().zip(dw) {
        if d != 0.0 {
            acc.axpy(-d, t);
        }
    }
    Ok(acc)
}

fn noise_terms(u: &VectorField, params: &SnsParams, dw: &[f64]) -> Result<Vec<VectorField>> {
    if dw.len() != params.ens.len() {
        return Err(Error::IncrementLength { expected: params.ens.len(), got: dw.len() });
    }
    projected_noise_terms(u, &params.ens, params.visc)
}

pub fn sns_step_ito_parts(u: &VectorField, params: &SnsParams, dw: &[f64]) -> Result<StepParts> {
    check_cfl(u, params.dt)?;
    let mut drift = advective_drift(u)?;
    let inner = noise_terms(u, params, dw)?;
    if params.ito_correction && !params.ens.is_empty() {
        drift.axpy(1.0, &corrector_from_terms(u.grid, &params.ens, params.visc, &inner)?);
    }
    let noise = noise_from_terms(u, &inner, dw)?;
    let has_noise = dw.iter().any(|&d| d != 0.0);
    let ustar = explicit_stage(u, params.dt, &drift, &noise, has_noise);
    let state = implicit_finish(&ustar, params.visc, params.dt)?;
    Ok(StepParts { state, drift, noise })
}

/// Semi-implicit Euler-Maruyama step of the Itô form.
pub fn sns_step_ito(u: &VectorField, params: &SnsParams, dw: &[f64]) -> Result<VectorField> {
    Ok(sns_step_ito_parts(u, params, dw)?.state)
}

pub fn sns_step_stratonovich_heun_parts(u: &VectorField, params: &SnsParams, dw: &[f64]) -> Result<StepParts> {
    check_cfl(u, params.dt)?;
    let drift = advective_drift(u)?;
    let has_noise = dw.iter().any(|&d| d != 0.0);
    if dw.len() != params.ens.len() {
        return Err(Error::IncrementLength { expected: params.ens.len(), got: dw.len() });
    }
    if !has_noise {
        let n0 = VectorField::zeros(u.grid);
        let state = implicit_finish(&explicit_stage(u, params.dt, &drift, &n0, false), params.visc, params.dt)?;
        return Ok(StepParts { state, drift, noise: n0 });
    }
    let n0 = noise_from_terms(u, &noise_terms(u, params, dw)?, dw)?;
    let pred = implicit_finish(&explicit_stage(u, params.dt, &drift, &n0, true), params.visc, params.dt)?;
    let n1 = noise_from_terms(&pred, &noise_terms(&pred, params, dw)?, dw)?;
    let mut noise = n0;
    noise.axpy(1.0, &n1);
    noise.scale(0.5);
    let state = implicit_finish(&explicit_stage(u, params.dt, &drift, &noise, true), params.visc, params.dt)?;
    Ok(StepParts { state, drift, noise })
}

/// Heun step of the Stratonovich form: the noise coefficient is averaged
/// between the current state and an explicit predictor. No Itô drift.
pub fn sns_step_stratonovich_heun(u: &VectorField, params: &SnsParams, dw: &[f64]) -> Result<VectorField> {
    Ok(sns_step_stratonovich_heun_parts(u, params, dw)?.state)
}

pub fn sns_step_parts(u: &VectorField, params: &SnsParams, dw: &[f64]) -> Result<StepParts> {
    match params.scheme {
        Scheme::ItoSemiImplicit => sns_step_ito_parts(u, params, dw),
        Scheme::StratonovichHeun => sns_step_stratonovich_heun_parts(u, params, dw),
    }
}

/// Euler reference states with their boundary correctors, at the stored
/// instants of the trajectory.
#[derive(Clone, Debug)]
pub struct CorrectorTrack<'a> {
    pub traj: &'a EulerTrajectory,
    pub profile: CorrectorProfile,
    pub b: Vec<VectorField>,
    /// Continuum `‖𝓑_t‖²`.
    pub b_sq: Vec<f64>,
}

impl<'a> CorrectorTrack<'a> {
    pub fn new(traj: &'a EulerTrajectory, profile: CorrectorProfile) -> Self {
        let b = traj.states.iter().map(|w| build_corrector(w, &profile)).collect();
        let b_sq = traj.states.iter().map(|w| corrector_l2_sq(&trace_data(w), &profile)).collect();
        CorrectorTrack { traj, profile, b, b_sq }
    }

    /// `(path step, track index)` pairs for instants up to `horizon`.
    pub fn alignment(&self, dt: f64, horizon: f64) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        for (i, &t) in self.traj.times.iter().enumerate() {
            if t > horizon * (1.0 + 1e-12) {
                break;
            }
            let step = (t / dt).round();
            if (step * dt - t).abs() > 1e-9 * t.max(1.0) {
                return Err(Error::Misaligned);
            }
            out.push((step as usize, i));
        }
        if self.traj.horizon < horizon * (1.0 - 1e-12) {
            return Err(Error::Misaligned);
        }
        Ok(out)
    }
}

/// Comparison with the reference at one aligned instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedSample {
    pub step: usize,
    pub time: f64,
    /// `‖u - w‖²`
    pub err_sq: f64,
    /// `‖u - w - 𝓑‖²`, with `‖𝓑‖²` from the continuum profile integrals
    pub v_sq: f64,
    /// `‖𝓑‖²`
    pub b_sq: f64,
}

pub fn aligned_sample(u: &VectorField, track: &CorrectorTrack, idx: usize, step: usize) -> AlignedSample {
    let d = u.sub(&track.traj.states[idx]);
    let err_sq = l2_norm_sq(&d);
    let cross = inner_unchecked(&d, &track.b[idx]);
    let b_sq = track.b_sq[idx];
    AlignedSample { step, time: track.traj.times[idx], err_sq, v_sq: (err_sq - 2.0 * cross + b_sq).max(0.0), b_sq }
}

/// Per-step record. Row `n` describes the state after step `n`; the work
/// terms are those of the step that produced it (zero on row 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub l2_sq: f64,
    /// `ν_h Σ_{j=1,2} ‖∂_j u‖²`
    pub diss_h: f64,
    /// `ν_z ‖∂_3 u‖²`
    pub diss_z: f64,
    /// `‖∇u‖²` over the plate strips
    pub strip_full: f64,
    /// `Σ_{j=1,2} ‖∂_j u‖²` over the plate strips
    pub strip_tan: f64,
    /// `2 dt ⟨F, u_{n-1}⟩`
    pub drift_work: f64,
    /// `2 ⟨N, u_{n-1}⟩`
    pub noise_work: f64,
    /// `‖N‖²`, the realized quadratic variation
    pub qv: f64,
    /// `-2 dt (ν_h d_h + ν_z d_z)(u_n)`
    pub visc_work: f64,
    /// `‖div u‖ / ‖u‖`
    pub div_rel: f64,
    /// Largest normal plate value over `‖u‖_∞`
    pub trace_rel: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathDiagnostics {
    pub records: Vec<StepRecord>,
    pub aligned: Vec<AlignedSample>,
    pub dt: f64,
    pub kato_delta: f64,
    /// Set when the path stopped early (non-finite state or CFL violation).
    pub aborted: Option<String>,
}

impl PathDiagnostics {
    pub fn sup_v_sq(&self) -> f64 {
        self.aligned.iter().map(|a| a.v_sq).fold(0.0, f64::max)
    }

    pub fn sup_err_sq(&self) -> f64 {
        self.aligned.iter().map(|a| a.err_sq).fold(0.0, f64::max)
    }

    pub fn sup_b(&self) -> f64 {
        self.aligned.iter().map(|a| a.b_sq.sqrt()).fold(0.0, f64::max)
    }

    pub fn sup_l2_sq(&self) -> f64 {
        self.records.iter().map(|r| r.l2_sq).fold(0.0, f64::max)
    }

    pub fn max_div_rel(&self) -> f64 {
        self.records.iter().map(|r| r.div_rel).fold(0.0, f64::max)
    }

    pub fn max_trace_rel(&self) -> f64 {
        self.records.iter().map(|r| r.trace_rel).fold(0.0, f64::max)
    }

    /// Left-endpoint rule over the recorded steps: `Σ_n dt g(record_n)`.
    pub fn time_integral(&self, g: impl Fn(&StepRecord) -> f64) -> f64 {
        let n = self.records.len().saturating_sub(1);
        self.records[..n].iter().map(|r| self.dt * g(r)).sum()
    }
}

#[derive(Clone, Debug)]
pub struct PathResult {
    pub diagnostics: PathDiagnostics,
    pub final_state: VectorField,
    pub snapshots: Vec<(usize, VectorField)>,
}

fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `(‖div u‖ / ‖u‖, max plate |u·n| / ‖u‖_∞)`, both zero for `u = 0`.
pub fn state_residuals(u: &VectorField) -> (f64, f64) {
    (relative(divergence(u).l2_norm(), l2_norm(u)), relative(u.normal_trace_max(), u.max_abs()))
}

fn record(u: &VectorField, params: &SnsParams, step: usize) -> Result<StepRecord> {
    let (dh, dz) = dissipation(u);
    let (div_rel, trace_rel) = state_residuals(u);
    Ok(StepRecord {
        step,
        time: step as f64 * params.dt,
        l2_sq: l2_norm_sq(u),
        diss_h: params.visc.nu_h * dh,
        diss_z: params.visc.nu_z * dz,
        strip_full: strip_integral(u, params.kato_delta, &[0, 1, 2])?,
        strip_tan: strip_integral(u, params.kato_delta, &[0, 1])?,
        drift_work: 0.0,
        noise_work: 0.0,
        qv: 0.0,
        visc_work: 0.0,
        div_rel,
        trace_rel,
    })
}

/// Integrate one path to the horizon. Non-finite states and CFL violations
/// end the path early with `aborted` set; other errors are returned.
pub fn simulate_path(u0: &VectorField, params: &SnsParams, track: Option<&CorrectorTrack>) -> Result<PathResult> {
    if !(params.dt > 0.0 && params.horizon >= 0.0) {
        return Err(Error::Precondition("dt must be positive and the horizon non-negative".into()));
    }
    let n = step_count(params.horizon, params.dt);
    let align = match track {
        Some(t) => {
            if t.traj.grid() != u0.grid {
                return Err(Error::GridMismatch);
            }
            t.alignment(params.dt, params.horizon)?
        }
        None => Vec::new(),
    };
    let stream = params.brownian();
    let mut u = u0.clone();
    let mut diag = PathDiagnostics { dt: params.dt, kato_delta: params.kato_delta, ..Default::default() };
    let mut snapshots = Vec::new();
    let mut next_align = align.iter().peekable();
    let mut observe = |u: &VectorField, step: usize, diag: &mut PathDiagnostics| {
        while let Some(&&(s, i)) = next_align.peek() {
            if s > step {
                break;
            }
            if s == step {
                diag.aligned.push(aligned_sample(u, track.expect("alignment implies a track"), i, s));
            }
            next_align.next();
        }
    };
    diag.records.push(record(&u, params, 0)?);
    observe(&u, 0, &mut diag);
    if params.snapshot_every > 0 {
        snapshots.push((0, u.clone()));
    }
    for step in 1..=n {
        let dw = params.increments(&stream, (step - 1) as u64);
        let parts = match sns_step_parts(&u, params, &dw) {
            Ok(p) => p,
            Err(e @ (Error::Cfl { .. } | Error::NonFinite(_))) => {
                diag.aborted = Some(format!("step {step}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let mut rec = record(&parts.state, params, step)?;
        rec.drift_work = 2.0 * params.dt * inner_unchecked(&parts.drift, &u);
        rec.noise_work = 2.0 * inner_unchecked(&parts.noise, &u);
        rec.qv = l2_norm_sq(&parts.noise);
        rec.visc_work = -2.0 * params.dt * (rec.diss_h + rec.diss_z);
        u = parts.state;
        diag.records.push(rec);
        observe(&u, step, &mut diag);
        if params.snapshot_every > 0 && (step % params.snapshot_every == 0 || step == n) {
            snapshots.push((step, u.clone()));
        }
    }
    Ok(PathResult { diagnostics: diag, final_state: u, snapshots })
}

/// Per-step residual of the discrete energy identity
/// `Δ‖u‖² = 2dt⟨F,u⟩ + 2⟨N,u⟩ + ‖N‖² - 2dt(ν_h d_h + ν_z d_z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    pub mean_abs: f64,
}

pub fn energy_budget(diag: &PathDiagnostics) -> EnergyBudget {
    let residuals: Vec<f64> = diag
        .records
        .windows(2)
        .map(|w| {
            let r = &w[1];
            (r.l2_sq - w[0].l2_sq) - (r.drift_work + r.noise_work + r.qv + r.visc_work)
        })
        .collect();
    let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mean_abs = if residuals.is_empty() {
        0.0
    } else {
        residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64
    };
    EnergyBudget { residuals, max_abs, mean_abs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{divergence, l2_norm};
    use crate::euler::{default_initial_spec, initial_state, run_euler, EulerConfig};
    use crate::grid::Grid;
    use crate::noise::default_ensemble;
    use std::f64::consts::PI;

    fn heat_start(g: Grid) -> VectorField {
        VectorField::from_fn(g, |c, p| if c == 0 { (PI * p[2]).sin() } else { 0.0 })
    }

    #[test]
    fn heat_decay_matches_closed_form() {
        let g = Grid::new(8, 8, 64).unwrap();
        let nu = 0.1;
        let params = SnsParams::new(ViscosityPair::new(nu, nu).unwrap(), NoiseEnsemble::empty(), 1e-4, 0.1);
        let out = simulate_path(&heat_start(g), &params, None).unwrap();
        let exact = heat_start(g).scaled((-nu * PI * PI * 0.1).exp());
        let rel = l2_norm(&out.final_state.sub(&exact)) / l2_norm(&exact);
        assert!(rel < 1e-2, "{rel}");
        let b = energy_budget(&out.diagnostics);
        assert!(b.max_abs <= 1e-8, "{}", b.max_abs);
    }

    #[test]
    fn zero_noise_reduces_to_deterministic() {
        let g = Grid::new(8, 8, 9).unwrap();
        let u = initial_state(&default_initial_spec(), g).unwrap();
        let visc = ViscosityPair::new(0.05, 0.01).unwrap();
        let det = step_deterministic(&u, visc, 1e-3).unwrap();
        let empty = SnsParams::new(visc, NoiseEnsemble::empty(), 1e-3, 1.0);
        assert_eq!(sns_step_ito(&u, &empty, &[]).unwrap(), det);
        let mut noisy = SnsParams::new(visc, default_ensemble(), 1e-3, 1.0);
        noisy.scheme = Scheme::StratonovichHeun;
        let heun = sns_step_stratonovich_heun(&u, &noisy, &[0.0; 4]).unwrap();
        assert!(heun.sub(&det).max_abs() <= 1e-12 * det.max_abs());
    }

    #[test]
    fn states_are_solenoidal_and_impermeable() {
        let g = Grid::new(8, 8, 9).unwrap();
        let u0 = initial_state(&default_initial_spec(), g).unwrap();
        let mut params = SnsParams::new(ViscosityPair::new(0.05, 0.01).unwrap(), default_ensemble(), 2e-3, 0.02);
        params.snapshot_every = 1;
        params.seed = 3;
        for scheme in [Scheme::ItoSemiImplicit, Scheme::StratonovichHeun] {
            params.scheme = scheme;
            let out = simulate_path(&u0, &params, None).unwrap();
            assert_eq!(out.snapshots.len(), 11);
            for (_, s) in &out.snapshots {
                assert!(divergence(s).l2_norm() <= 1e-9 * l2_norm(s));
                assert!(s.normal_trace_max() <= 1e-9 * s.max_abs());
            }
        }
    }

    #[test]
    fn reproducible_diagnostics() {
        let g = Grid::new(8, 8, 9).unwrap();
        let u0 = initial_state(&default_initial_spec(), g).unwrap();
        let mut params = SnsParams::new(ViscosityPair::new(0.05, 0.01).unwrap(), default_ensemble(), 2e-3, 0.01);
        params.seed = 11;
        let a = simulate_path(&u0, &params, None).unwrap().diagnostics;
        let b = simulate_path(&u0, &params, None).unwrap().diagnostics;
        assert_eq!(a, b);
        params.stream = 1;
        assert_ne!(a, simulate_path(&u0, &params, None).unwrap().diagnostics);
    }

    #[test]
    fn cfl_violation_aborts_path() {
        let g = Grid::new(8, 8, 9).unwrap();
        let u0 = initial_state(&default_initial_spec(), g).unwrap().scaled(1e3);
        let params = SnsParams::new(ViscosityPair::new(0.05, 0.01).unwrap(), NoiseEnsemble::empty(), 1e-2, 0.1);
        let out = simulate_path(&u0, &params, None).unwrap();
        assert!(out.diagnostics.aborted.is_some());
        assert_eq!(out.diagnostics.records.len(), 1);
    }

    #[test]
    fn viscous_run_separates_from_euler() {
        let g = Grid::new(8, 8, 9).unwrap();
        let w0 = initial_state(&default_initial_spec(), g).unwrap();
        let traj = run_euler(&w0, &EulerConfig { dt: 1e-2, horizon: 0.2, sample_every: 5 }).unwrap();
        let profile = crate::corrector::vertical_profile(0.1, 0.1).unwrap();
        let track = CorrectorTrack::new(&traj, profile);
        let params = SnsParams::new(ViscosityPair::new(0.9, 0.9).unwrap(), NoiseEnsemble::empty(), 1e-2, 0.2);
        let out = simulate_path(&w0, &params, Some(&track)).unwrap();
        let d = &out.diagnostics;
        assert_eq!(d.aligned.len(), 5);
        assert!(d.records.last().unwrap().l2_sq < 0.5 * d.records[0].l2_sq);
        assert!((traj.states.last().unwrap().max_abs() / w0.max_abs() - 1.0).abs() < 0.1);
        let last = d.aligned.last().unwrap();
        assert!(d.sup_v_sq() >= last.v_sq);
        for a in &d.aligned {
            assert!(a.err_sq.sqrt() <= a.v_sq.sqrt() + a.b_sq.sqrt() + 1e-12);
        }
        let mut bad = params.clone();
        bad.dt = 3e-3;
        assert!(matches!(simulate_path(&w0, &bad, Some(&track)), Err(Error::Misaligned)));
    }

    #[test]
    fn budget_on_smooth_deterministic_run() {
        let g = Grid::new(16, 16, 17).unwrap();
        let u0 = initial_state(&default_initial_spec(), g).unwrap();
        let params = SnsParams::new(ViscosityPair::new(1e-3, 1e-4).unwrap(), NoiseEnsemble::empty(), 1e-3, 0.02);
        let out = simulate_path(&u0, &params, None).unwrap();
        assert!(energy_budget(&out.diagnostics).max_abs <= 1e-6);
    }

    #[test]
    fn strip_tangential_below_full() {
        let g = Grid::new(8, 8, 16).unwrap();
        let u0 = initial_state(&default_initial_spec(), g).unwrap();
        let params = SnsParams::new(ViscosityPair::new(0.05, 0.01).unwrap(), default_ensemble(), 2e-3, 0.01);
        let out = simulate_path(&u0, &params, None).unwrap();
        for r in &out.diagnostics.records {
            assert!(r.strip_tan <= r.strip_full);
        }
    }
}
