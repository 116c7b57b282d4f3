//! Inviscid-limit sweep, boundary-strip dissipation and scheme comparisons.

use serde::{Deserialize, Serialize};

use crate::analytic::FieldSpec;
use crate::calculus::l2_norm_sq;
use crate::corrector::{vertical_profile, CorrectorProfile, ThetaRule};
use crate::error::{Error, Result};
use crate::euler::{default_initial_spec, initial_state, run_euler, step_count, EulerConfig, EulerTrajectory};
use crate::field::VectorField;
use crate::grid::Grid;
use crate::noise::{default_specs, NoiseEnsemble};
use crate::projection::ViscosityPair;
use crate::rng::stream_id;
use crate::sns::{
    energy_budget, kato_delta, simulate_path, sns_step_parts, state_residuals, CorrectorTrack, PathDiagnostics, Scheme,
    SnsParams,
};
use crate::stats::{loglog_slope, mean_stderr, spearman};

pub const PURPOSE_SWEEP: u8 = 1;
pub const PURPOSE_ITO_STRAT: u8 = 2;
pub const PURPOSE_ENERGY: u8 = 3;

/// Run `f` over `items` on at most `jobs` threads, returning results in input order.
pub fn map_ordered<T, R, F>(items: Vec<T>, jobs: Option<usize>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || items.into_par_iter().map(&f).collect::<Vec<R>>();
        match jobs {
            Some(j) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(j.max(1))
                    .build()
                    .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
                Ok(pool.install(run))
            }
            None => Ok(run()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        Ok(items.into_iter().map(f).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepLevel {
    pub k: u32,
    pub nu_h: f64,
    pub nu_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub levels: Vec<SweepLevel>,
    pub samples: usize,
    pub base_seed: u64,
    pub grid: [usize; 3],
    pub dt: f64,
    pub horizon: f64,
    pub theta_rule: ThetaRule,
    /// Reference states are kept every this many steps; `sup_t` is taken over them.
    pub sample_every: usize,
    pub ensemble: Vec<FieldSpec>,
    pub initial: FieldSpec,
    /// Marks a comparison sequence that need not satisfy the limit hypothesis.
    pub control: bool,
    /// Keep every path's per-step diagnostics in the result.
    #[serde(default)]
    pub keep_diagnostics: bool,
}

/// `ν_h = 2^{-k}`, `ν_z = 4^{-k}` for `k = 1..=levels`.
pub fn default_levels(levels: u32) -> Vec<SweepLevel> {
    (1..=levels).map(|k| SweepLevel { k, nu_h: 0.5f64.powi(k as i32), nu_z: 0.25f64.powi(k as i32) }).collect()
}

/// `ν_z = ν_h = 2^{-k}`.
pub fn control_levels(levels: u32) -> Vec<SweepLevel> {
    (1..=levels).map(|k| SweepLevel { k, nu_h: 0.5f64.powi(k as i32), nu_z: 0.5f64.powi(k as i32) }).collect()
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            levels: default_levels(6),
            samples: 8,
            base_seed: 20240531,
            grid: [32, 32, 33],
            dt: 1e-3,
            horizon: 0.5,
            theta_rule: ThetaRule::default(),
            sample_every: 10,
            ensemble: default_specs(),
            initial: default_initial_spec(),
            control: false,
            keep_diagnostics: false,
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Precondition(m));
        if self.levels.is_empty() {
            return fail("sweep has no levels".into());
        }
        if self.samples == 0 {
            return fail("at least one sample per level is required".into());
        }
        if self.sample_every == 0 {
            return fail("sample_every must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.horizon > 0.0) {
            return fail("dt and horizon must be positive".into());
        }
        self.theta_rule.validate()?;
        Grid::new(self.grid[0], self.grid[1], self.grid[2])?;
        for l in &self.levels {
            ViscosityPair::new(l.nu_h, l.nu_z)?;
            vertical_profile(self.theta_rule.theta(l.nu_h), l.nu_z)?;
        }
        for w in self.levels.windows(2) {
            if w[1].nu_h >= w[0].nu_h {
                return fail(format!("nu_h must decrease strictly along the sweep (k={} -> k={})", w[0].k, w[1].k));
            }
        }
        if self.control {
            return Ok(());
        }
        for l in &self.levels {
            if l.nu_z > l.nu_h {
                return fail(format!(
                    "level k={} has nu_z > nu_h; the inviscid-limit hypothesis needs nu_h^k -> 0 and \
                     nu_z^k / nu_h^k -> 0 (mark the plan as control to run it anyway)",
                    l.k
                ));
            }
        }
        for w in self.levels.windows(2) {
            if w[1].nu_z / w[1].nu_h >= w[0].nu_z / w[0].nu_h {
                return fail(format!(
                    "nu_z/nu_h must decrease strictly (k={} -> k={}); the inviscid-limit hypothesis \
                     needs nu_h^k -> 0 and nu_z^k / nu_h^k -> 0 (mark the plan as control to run it anyway)",
                    w[0].k, w[1].k
                ));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid[0], self.grid[1], self.grid[2])
    }

    pub fn profile(&self, level: &SweepLevel) -> Result<CorrectorProfile> {
        vertical_profile(self.theta_rule.theta(level.nu_h), level.nu_z)
    }

    pub fn euler_config(&self) -> EulerConfig {
        EulerConfig { dt: self.dt, horizon: self.horizon, sample_every: self.sample_every }
    }

    pub fn path_params(&self, level: &SweepLevel, sample: usize) -> Result<SnsParams> {
        let visc = ViscosityPair::new(level.nu_h, level.nu_z)?;
        let mut p = SnsParams::new(visc, NoiseEnsemble::from_specs(&self.ensemble)?, self.dt, self.horizon);
        p.seed = self.base_seed;
        p.stream = stream_id(level.k, sample as u32, PURPOSE_SWEEP);
        Ok(p)
    }
}

/// `ν_z ∫ ‖∇u‖²` and `ν_z ∫ Σ_{j=1,2} ‖∂_j u‖²` over the strip of width `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KatoValue {
    pub delta: f64,
    pub full: f64,
    pub tangential: f64,
    /// `δ` is narrower than one vertical cell.
    pub below_resolution: bool,
}

pub fn kato_diagnostic(diag: &PathDiagnostics, nu_z: f64, hz: f64) -> KatoValue {
    KatoValue {
        delta: diag.kato_delta,
        full: nu_z * diag.time_integral(|r| r.strip_full),
        tangential: nu_z * diag.time_integral(|r| r.strip_tan),
        below_resolution: diag.kato_delta < hz,
    }
}

/// The Grönwall quantity `v = u - w - 𝓑` along a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VErrorLedger {
    pub sup_v_sq: f64,
    /// `∫ ‖v‖²` by the trapezoid rule over the aligned instants
    pub int_v_sq: f64,
    pub sup_b: f64,
    pub sup_err_sq: f64,
}

pub fn v_error(diag: &PathDiagnostics) -> Result<VErrorLedger> {
    if diag.aligned.is_empty() {
        return Err(Error::Misaligned);
    }
    let int_v_sq = diag.aligned.windows(2).map(|w| 0.5 * (w[1].time - w[0].time) * (w[0].v_sq + w[1].v_sq)).sum();
    Ok(VErrorLedger { sup_v_sq: diag.sup_v_sq(), int_v_sq, sup_b: diag.sup_b(), sup_err_sq: diag.sup_err_sq() })
}

/// Per-path summary kept by the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub k: u32,
    pub sample: usize,
    pub stream: u64,
    pub aborted: Option<String>,
    pub sup_err_sq: f64,
    pub sup_v_sq: f64,
    pub sup_b: f64,
    pub sup_l2_sq: f64,
    /// `∫ ν_h Σ_j ‖∂_j u‖²`
    pub diss_h: f64,
    /// `∫ ν_z ‖∂_3 u‖²`
    pub diss_z: f64,
    pub kato: KatoValue,
    pub max_div_rel: f64,
    pub max_trace_rel: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: Option<f64>,
}

impl Estimate {
    fn of(xs: &[f64]) -> Self {
        let (mean, stderr) = mean_stderr(xs);
        Estimate { mean, stderr }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: u32,
    pub nu_h: f64,
    pub nu_z: f64,
    pub completed: usize,
    pub aborted: usize,
    /// More than half of the paths aborted; excluded from trends.
    pub dropped: bool,
    pub sup_err_sq: Estimate,
    pub sup_v_sq: Estimate,
    pub diss_h: Estimate,
    pub diss_z: Estimate,
    pub kato_full: Estimate,
    pub kato_tan: Estimate,
    pub sup_l2_sq: Estimate,
    pub kato_delta: f64,
    pub kato_below_resolution: bool,
    pub eps: f64,
    pub theta: f64,
    pub sup_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub quantity: String,
    pub spearman: f64,
    pub first_mean: f64,
    pub last_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub paths: Vec<PathSummary>,
    pub trends: Vec<Trend>,
    pub euler_energy_drift: f64,
    /// Largest `‖div u‖ / ‖u‖` over every emitted state of every path.
    pub max_div_rel: f64,
    /// Largest plate normal trace over `‖u‖_∞`, likewise.
    pub max_trace_rel: f64,
    /// Per-path diagnostics in `paths` order, when the plan asks for them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<PathDiagnostics>,
}

impl SweepResult {
    pub fn trend(&self, quantity: &str) -> Option<&Trend> {
        self.trends.iter().find(|t| t.quantity == quantity)
    }
}

pub const TRACKED: [&str; 5] = ["sup_err_sq", "diss_h", "diss_z", "kato_tan", "kato_full"];

fn tracked_value(row: &SweepRow, q: &str) -> f64 {
    match q {
        "sup_err_sq" => row.sup_err_sq.mean,
        "diss_h" => row.diss_h.mean,
        "diss_z" => row.diss_z.mean,
        "kato_tan" => row.kato_tan.mean,
        "kato_full" => row.kato_full.mean,
        _ => f64::NAN,
    }
}

pub fn run_inviscid_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    run_inviscid_sweep_with(plan, None)
}

/// The sweep with at most `jobs` worker threads. Output does not depend on `jobs`.
pub fn run_inviscid_sweep_with(plan: &SweepPlan, jobs: Option<usize>) -> Result<SweepResult> {
    plan.validate()?;
    let grid = plan.grid()?;
    let w0 = initial_state(&plan.initial, grid)?;
    let traj = run_euler(&w0, &plan.euler_config())?;
    sweep_against(plan, &traj, jobs)
}

/// The sweep against a precomputed reference trajectory.
pub fn sweep_against(plan: &SweepPlan, traj: &EulerTrajectory, jobs: Option<usize>) -> Result<SweepResult> {
    plan.validate()?;
    let grid = plan.grid()?;
    if traj.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let profiles = plan.levels.iter().map(|l| plan.profile(l)).collect::<Result<Vec<_>>>()?;
    let tracks: Vec<CorrectorTrack> = profiles.iter().map(|p| CorrectorTrack::new(traj, *p)).collect();
    let u0 = traj.states[0].clone();
    let mut jobs_list = Vec::new();
    for (li, level) in plan.levels.iter().enumerate() {
        for s in 0..plan.samples {
            jobs_list.push((li, *level, s));
        }
    }
    let results = map_ordered(jobs_list, jobs, |(li, level, s)| -> Result<(PathSummary, Option<PathDiagnostics>)> {
        let params = plan.path_params(&level, s)?;
        let out = simulate_path(&u0, &params, Some(&tracks[li]))?;
        let d = &out.diagnostics;
        let summary = PathSummary {
            k: level.k,
            sample: s,
            stream: params.stream,
            aborted: d.aborted.clone(),
            sup_err_sq: d.sup_err_sq(),
            sup_v_sq: d.sup_v_sq(),
            sup_b: d.sup_b(),
            sup_l2_sq: d.sup_l2_sq(),
            diss_h: d.time_integral(|r| r.diss_h),
            diss_z: d.time_integral(|r| r.diss_z),
            kato: kato_diagnostic(d, level.nu_z, grid.hz),
            max_div_rel: d.max_div_rel(),
            max_trace_rel: d.max_trace_rel(),
        };
        Ok((summary, plan.keep_diagnostics.then_some(out.diagnostics)))
    })?;
    let (paths, diagnostics): (Vec<PathSummary>, Vec<Option<PathDiagnostics>>) =
        results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let diagnostics: Vec<PathDiagnostics> = diagnostics.into_iter().flatten().collect();
    let mut rows = Vec::new();
    for (li, level) in plan.levels.iter().enumerate() {
        let all: Vec<&PathSummary> = paths.iter().filter(|p| p.k == level.k).collect();
        let ok: Vec<&PathSummary> = all.iter().copied().filter(|p| p.aborted.is_none()).collect();
        let col = |g: &dyn Fn(&PathSummary) -> f64| Estimate::of(&ok.iter().map(|p| g(p)).collect::<Vec<_>>());
        let delta = kato_delta(level.nu_z);
        rows.push(SweepRow {
            k: level.k,
            nu_h: level.nu_h,
            nu_z: level.nu_z,
            completed: ok.len(),
            aborted: all.len() - ok.len(),
            dropped: 2 * ok.len() < all.len(),
            sup_err_sq: col(&|p| p.sup_err_sq),
            sup_v_sq: col(&|p| p.sup_v_sq),
            diss_h: col(&|p| p.diss_h),
            diss_z: col(&|p| p.diss_z),
            kato_full: col(&|p| p.kato.full),
            kato_tan: col(&|p| p.kato.tangential),
            sup_l2_sq: col(&|p| p.sup_l2_sq),
            kato_delta: delta,
            kato_below_resolution: delta < grid.hz,
            eps: profiles[li].eps,
            theta: profiles[li].theta,
            sup_b: ok.iter().map(|p| p.sup_b).fold(0.0, f64::max),
        });
    }
    let kept: Vec<&SweepRow> = rows.iter().filter(|r| !r.dropped).collect();
    let ks: Vec<f64> = kept.iter().map(|r| r.k as f64).collect();
    let trends = TRACKED
        .iter()
        .map(|q| {
            let ys: Vec<f64> = kept.iter().map(|r| tracked_value(r, q)).collect();
            Trend {
                quantity: q.to_string(),
                spearman: spearman(&ks, &ys),
                first_mean: ys.first().copied().unwrap_or(f64::NAN),
                last_mean: ys.last().copied().unwrap_or(f64::NAN),
            }
        })
        .collect();
    let max_div_rel = paths.iter().map(|p| p.max_div_rel).fold(0.0, f64::max);
    let max_trace_rel = paths.iter().map(|p| p.max_trace_rel).fold(0.0, f64::max);
    Ok(SweepResult {
        rows,
        paths,
        trends,
        euler_energy_drift: traj.energy_drift(),
        max_div_rel,
        max_trace_rel,
        diagnostics,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub dt: f64,
    /// `E (1/N) Σ_n ‖u^Itô_n - u^Heun_n‖²`
    pub gap: f64,
    /// Same with the Itô drift removed from the Itô scheme.
    pub ablated_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItoStratReport {
    pub rows: Vec<GapRow>,
    pub order: f64,
    pub ablated_order: f64,
    pub max_div_rel: f64,
    pub max_trace_rel: f64,
}

/// Paired comparison of the Itô scheme (with and without its drift
/// correction) against the Stratonovich-Heun scheme on shared Brownian paths.
/// Every `dt` must be an integer multiple of the smallest one.
#[allow(clippy::too_many_arguments)]
pub fn ito_strat_study(
    u0: &VectorField,
    visc: ViscosityPair,
    ens: &NoiseEnsemble,
    dts: &[f64],
    horizon: f64,
    paths: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<ItoStratReport> {
    let fine = dts.iter().copied().fold(f64::INFINITY, f64::min);
    let mut subs = Vec::new();
    for &dt in dts {
        let r = (dt / fine).round();
        if (r * fine - dt).abs() > 1e-9 * dt {
            return Err(Error::Precondition(format!("dt {dt} is not a multiple of {fine}")));
        }
        subs.push(r as u64);
    }
    let mut items = Vec::new();
    for (i, &dt) in dts.iter().enumerate() {
        for p in 0..paths {
            items.push((dt, subs[i], p));
        }
    }
    let per = map_ordered(items, jobs, |(dt, sub, p)| -> Result<(f64, f64, f64, f64)> {
        let mut base = SnsParams::new(visc, ens.clone(), dt, horizon);
        base.seed = seed;
        base.stream = stream_id(0, p as u32, PURPOSE_ITO_STRAT);
        base.substeps = sub;
        let mut heun = base.clone();
        heun.scheme = Scheme::StratonovichHeun;
        let mut abl = base.clone();
        abl.ito_correction = false;
        let stream = base.brownian();
        let n = step_count(horizon, dt);
        let (mut ui, mut us, mut ua) = (u0.clone(), u0.clone(), u0.clone());
        let (mut g, mut ga, mut dmax, mut tmax) = (0.0, 0.0, 0.0f64, 0.0f64);
        for step in 0..n {
            let dw = base.increments(&stream, step as u64);
            ui = sns_step_parts(&ui, &base, &dw)?.state;
            us = sns_step_parts(&us, &heun, &dw)?.state;
            ua = sns_step_parts(&ua, &abl, &dw)?.state;
            g += l2_norm_sq(&ui.sub(&us));
            ga += l2_norm_sq(&ua.sub(&us));
            for u in [&ui, &us, &ua] {
                let (d, t) = state_residuals(u);
                dmax = dmax.max(d);
                tmax = tmax.max(t);
            }
        }
        Ok((g / n as f64, ga / n as f64, dmax, tmax))
    })?;
    let per = per.into_iter().collect::<Result<Vec<_>>>()?;
    let rows: Vec<GapRow> = dts
        .iter()
        .enumerate()
        .map(|(i, &dt)| {
            let chunk = &per[i * paths..(i + 1) * paths];
            GapRow {
                dt,
                gap: chunk.iter().map(|c| c.0).sum::<f64>() / paths as f64,
                ablated_gap: chunk.iter().map(|c| c.1).sum::<f64>() / paths as f64,
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let order = loglog_slope(&xs, &rows.iter().map(|r| r.gap).collect::<Vec<_>>());
    let ablated_order = loglog_slope(&xs, &rows.iter().map(|r| r.ablated_gap).collect::<Vec<_>>());
    let max_div_rel = per.iter().map(|c| c.2).fold(0.0, f64::max);
    let max_trace_rel = per.iter().map(|c| c.3).fold(0.0, f64::max);
    Ok(ItoStratReport { rows, order, ablated_order, max_div_rel, max_trace_rel })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub dt: f64,
    pub mean_abs: f64,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetStudy {
    pub rows: Vec<BudgetRow>,
    pub order: f64,
    pub max_div_rel: f64,
    pub max_trace_rel: f64,
}

/// Energy-ledger residual of noisy Itô runs under `dt` refinement, averaged over paths.
#[allow(clippy::too_many_arguments)]
pub fn energy_budget_study(
    u0: &VectorField,
    visc: ViscosityPair,
    ens: &NoiseEnsemble,
    dts: &[f64],
    horizon: f64,
    paths: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<BudgetStudy> {
    let mut items = Vec::new();
    for &dt in dts {
        for p in 0..paths {
            items.push((dt, p));
        }
    }
    let per = map_ordered(items, jobs, |(dt, p)| -> Result<(f64, f64, f64, f64)> {
        let mut params = SnsParams::new(visc, ens.clone(), dt, horizon);
        params.seed = seed;
        params.stream = stream_id(0, p as u32, PURPOSE_ENERGY);
        let out = simulate_path(u0, &params, None)?;
        if let Some(a) = out.diagnostics.aborted {
            return Err(Error::Precondition(format!("budget path aborted: {a}")));
        }
        let d = &out.diagnostics;
        let b = energy_budget(d);
        Ok((b.mean_abs, b.max_abs, d.max_div_rel(), d.max_trace_rel()))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows: Vec<BudgetRow> = dts
        .iter()
        .enumerate()
        .map(|(i, &dt)| {
            let c = &per[i * paths..(i + 1) * paths];
            BudgetRow {
                dt,
                mean_abs: c.iter().map(|x| x.0).sum::<f64>() / paths as f64,
                max_abs: c.iter().map(|x| x.1).fold(0.0, f64::max),
            }
        })
        .collect();
    let order = loglog_slope(
        &rows.iter().map(|r| r.dt).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.mean_abs).collect::<Vec<_>>(),
    );
    let max_div_rel = per.iter().map(|c| c.2).fold(0.0, f64::max);
    let max_trace_rel = per.iter().map(|c| c.3).fold(0.0, f64::max);
    Ok(BudgetStudy { rows, order, max_div_rel, max_trace_rel })
}

/// Zero-noise run from `u_0 = (sin πz, 0, 0)` against `e^{-ν_z π² t} u_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatReport {
    pub nu_z: f64,
    pub exact_factor: f64,
    /// `‖u_T - e^{-ν_z π² T} u_0‖ / ‖e^{-ν_z π² T} u_0‖`
    pub rel_error: f64,
    pub budget_max_abs: f64,
    pub max_div_rel: f64,
    pub max_trace_rel: f64,
    pub diagnostics: PathDiagnostics,
}

pub fn heat_start(grid: Grid) -> VectorField {
    VectorField::from_fn(grid, |c, p| if c == 0 { (std::f64::consts::PI * p[2]).sin() } else { 0.0 })
}

pub fn heat_decay_run(grid: Grid, visc: ViscosityPair, dt: f64, horizon: f64) -> Result<HeatReport> {
    let u0 = heat_start(grid);
    let params = SnsParams::new(visc, NoiseEnsemble::empty(), dt, horizon);
    let out = simulate_path(&u0, &params, None)?;
    let d = out.diagnostics;
    if let Some(a) = &d.aborted {
        return Err(Error::Precondition(format!("heat run aborted: {a}")));
    }
    let t_end = (d.records.len() - 1) as f64 * dt;
    let exact_factor = (-visc.nu_z * std::f64::consts::PI.powi(2) * t_end).exp();
    let exact = u0.scaled(exact_factor);
    let rel_error = l2_norm_sq(&out.final_state.sub(&exact)).sqrt() / l2_norm_sq(&exact).sqrt();
    Ok(HeatReport {
        nu_z: visc.nu_z,
        exact_factor,
        rel_error,
        budget_max_abs: energy_budget(&d).max_abs,
        max_div_rel: d.max_div_rel(),
        max_trace_rel: d.max_trace_rel(),
        diagnostics: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_run_tracks_closed_form() {
        let g = Grid::new(4, 4, 32).unwrap();
        let r = heat_decay_run(g, ViscosityPair::new(0.1, 0.1).unwrap(), 1e-4, 0.01).unwrap();
        assert!(r.rel_error < 1e-2, "{}", r.rel_error);
        assert!(r.budget_max_abs <= 1e-8, "{}", r.budget_max_abs);
        assert_eq!(r.diagnostics.records.len(), 101);
        assert!(r.max_div_rel <= 1e-9 && r.max_trace_rel <= 1e-9);
    }

    fn tiny_plan() -> SweepPlan {
        SweepPlan {
            levels: default_levels(2),
            samples: 2,
            grid: [8, 8, 9],
            dt: 5e-3,
            horizon: 0.05,
            sample_every: 2,
            ..Default::default()
        }
    }

    #[test]
    fn plan_guards() {
        assert!(SweepPlan::default().validate().is_ok());
        let mut p = tiny_plan();
        p.levels[1].nu_z = p.levels[1].nu_h;
        let e = p.validate().unwrap_err().to_string();
        assert!(e.contains("nu_z^k / nu_h^k -> 0"), "{e}");
        let mut q = tiny_plan();
        q.levels = vec![SweepLevel { k: 1, nu_h: 0.1, nu_z: 0.2 }];
        assert!(q.validate().unwrap_err().to_string().contains("nu_z > nu_h"));
        let mut c = tiny_plan();
        c.levels = control_levels(2);
        assert!(c.validate().is_err());
        c.control = true;
        c.theta_rule = ThetaRule::Proportional { c_tilde: 0.05 };
        assert!(c.validate().is_ok());
        let mut d = tiny_plan();
        d.levels.swap(0, 1);
        assert!(d.validate().is_err());
    }

    #[test]
    fn sweep_is_deterministic_across_job_counts() {
        let p = tiny_plan();
        let a = run_inviscid_sweep_with(&p, Some(1)).unwrap();
        let b = run_inviscid_sweep_with(&p, Some(2)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.rows.len(), 2);
        for r in &a.rows {
            assert_eq!(r.completed, 2);
            assert!(r.sup_err_sq.stderr.is_some());
            assert!(r.kato_tan.mean <= r.kato_full.mean);
        }
        for path in &a.paths {
            assert!(path.sup_err_sq.sqrt() <= path.sup_v_sq.sqrt() + path.sup_b + 1e-12);
        }
        assert!(a.diagnostics.is_empty());
        let kept = run_inviscid_sweep_with(&SweepPlan { keep_diagnostics: true, ..p }, Some(2)).unwrap();
        assert_eq!(kept.rows, a.rows);
        assert_eq!(kept.diagnostics.len(), 4);
        assert_eq!(kept.diagnostics[3].sup_err_sq(), a.paths[3].sup_err_sq);
    }

    #[test]
    fn degenerate_sweep_is_deterministic_gap() {
        let mut p = tiny_plan();
        p.levels.truncate(1);
        p.samples = 1;
        p.ensemble.clear();
        let r = run_inviscid_sweep(&p).unwrap();
        assert_eq!(r.rows[0].sup_err_sq.stderr, None);
        assert!(r.rows[0].sup_err_sq.mean > 0.0);
        assert!(r.trends[0].spearman.is_nan());
    }

    #[test]
    fn v_error_reductions() {
        let g = Grid::new(8, 8, 9).unwrap();
        let w0 = initial_state(&default_initial_spec(), g).unwrap();
        let traj = run_euler(&w0, &EulerConfig { dt: 1e-2, horizon: 0.04, sample_every: 1 }).unwrap();
        let profile = vertical_profile(1.0, 1e-8).unwrap();
        let track = CorrectorTrack::new(&traj, profile);
        // u ≡ w: v = -𝓑
        let mut diag = PathDiagnostics { dt: 1e-2, ..Default::default() };
        for (i, s) in traj.states.iter().enumerate() {
            diag.aligned.push(crate::sns::aligned_sample(s, &track, i, i));
        }
        let led = v_error(&diag).unwrap();
        assert!((led.sup_v_sq.sqrt() / led.sup_b - 1.0).abs() < 1e-12);
        assert!(led.sup_b < 0.05 && led.sup_b > 0.0);
        // u ≡ w + 𝓑 with a resolved layer: v vanishes at second order in h_z
        let rel = |nz: usize| {
            let g2 = Grid::new(8, 8, nz).unwrap();
            let w = initial_state(&default_initial_spec(), g2).unwrap();
            let traj2 =
                EulerTrajectory { times: vec![0.0], states: vec![w.clone()], horizon: 0.0, dt: 1.0, sample_every: 1 };
            let track2 = CorrectorTrack::new(&traj2, vertical_profile(1.0, 1.0 / 64.0).unwrap());
            let a = crate::sns::aligned_sample(&w.add(&track2.b[0]), &track2, 0, 0);
            a.v_sq / a.b_sq
        };
        let (coarse, fine) = (rel(64), rel(128));
        assert!(fine < 1e-2 && coarse / fine > 3.0, "{coarse} {fine}");
        assert!(v_error(&PathDiagnostics::default()).is_err());
    }

    #[test]
    fn map_ordered_keeps_order() {
        let out = map_ordered((0..50).collect(), Some(3), |x: i32| x * x).unwrap();
        assert_eq!(out, (0..50).map(|x| x * x).collect::<Vec<_>>());
    }
}
