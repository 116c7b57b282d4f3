//! One function per subcommand. Each writes its artifacts and returns the
//! checks it asserts plus a JSON block of headline statistics.

use std::f64::consts::PI;

use anisns::analytic::random_field;
use anisns::calculus::divergence;
use anisns::corrector::{
    corrector_l2_sq, hardy_check, log_space, profile_slopes, trace_bounds_report, trace_data, vertical_profile,
    HardyNorm,
};
use anisns::euler::{initial_state, run_euler, EulerConfig, EulerTrajectory};
use anisns::experiments::{
    energy_budget_study, heat_decay_run, ito_strat_study, map_ordered, sweep_against, Estimate, SweepResult, TRACKED,
};
use anisns::noise::{adjoint_residual, key_estimate_report, KeyEstimateReport, KeyEstimateRow};
use anisns::snapshot::{load_trajectory, save_trajectory, INDEX_FILE};
use anisns::sns::{state_residuals, PathDiagnostics};
use anisns::stats::loglog_slope;
use anisns::{Grid, VectorField};
use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::json;

use crate::artifacts::{Artifacts, Check};
use crate::config::RunConfig;

pub struct SuiteOutput {
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
}

/// Columns of every per-path diagnostics CSV.
pub const DIAG_COLUMNS: [&str; 10] =
    ["step", "time", "l2_sq", "diss_h", "diss_z", "strip", "strip_tan", "v_sup", "div_rel", "trace_rel"];

#[derive(Serialize)]
struct DiagRow {
    step: usize,
    time: f64,
    l2_sq: f64,
    diss_h: f64,
    diss_z: f64,
    strip: f64,
    strip_tan: f64,
    /// Running `sup ‖v‖²` over the aligned instants so far; empty without a reference.
    v_sup: Option<f64>,
    div_rel: f64,
    trace_rel: f64,
}

fn diag_rows(d: &PathDiagnostics) -> Vec<DiagRow> {
    let mut aligned = d.aligned.iter().peekable();
    let mut v_sup: Option<f64> = None;
    d.records
        .iter()
        .map(|r| {
            while let Some(a) = aligned.next_if(|a| a.step <= r.step) {
                v_sup = Some(v_sup.map_or(a.v_sq, |v| v.max(a.v_sq)));
            }
            DiagRow {
                step: r.step,
                time: r.time,
                l2_sq: r.l2_sq,
                diss_h: r.diss_h,
                diss_z: r.diss_z,
                strip: r.strip_full,
                strip_tan: r.strip_tan,
                v_sup,
                div_rel: r.div_rel,
                trace_rel: r.trace_rel,
            }
        })
        .collect()
}

fn residual_checks(cfg: &RunConfig, div_rel: f64, trace_rel: f64) -> [Check; 2] {
    [
        Check::at_most("max_div_rel", div_rel, cfg.tolerances.div_rel),
        Check::at_most("max_trace_rel", trace_rel, cfg.tolerances.trace_rel),
    ]
}

fn refine(g: Grid) -> Result<Grid> {
    Ok(Grid::new(2 * g.nx, 2 * g.ny, 2 * g.nz)?)
}

#[derive(Serialize)]
struct AdjointRow {
    sample: usize,
    seed: u64,
    phi_div_l2: f64,
    residual_coarse: f64,
    residual_fine: f64,
    order: f64,
}

#[derive(Serialize)]
struct KeyRow {
    grid: String,
    field: usize,
    mode: usize,
    lhs: f64,
    w1_term: f64,
    h_term: f64,
    z_term: f64,
    square_lhs: f64,
    square_rhs: f64,
    c_delta: f64,
    c_square: f64,
}

fn key_rows(label: &str, field: usize, rep: &KeyEstimateReport) -> Vec<KeyRow> {
    rep.rows
        .iter()
        .enumerate()
        .map(|(mode, r): (usize, &KeyEstimateRow)| KeyRow {
            grid: label.into(),
            field,
            mode,
            lhs: r.lhs,
            w1_term: r.w1_term,
            h_term: r.h_term,
            z_term: r.z_term,
            square_lhs: r.square_lhs,
            square_rhs: r.square_rhs,
            c_delta: r.c_delta,
            c_square: r.c_square,
        })
        .collect()
}

fn grid_label(g: Grid) -> String {
    format!("{}x{}x{}", g.nx, g.ny, g.nz)
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// Adjointness of the noise operator and the cancellation estimates.
pub fn identities(cfg: &RunConfig, art: &mut Artifacts) -> Result<SuiteOutput> {
    let c = &cfg.identities;
    let coarse = cfg.grid()?;
    let fine = refine(coarse)?;
    let visc = cfg.visc()?;
    let ens = cfg.ensemble()?;
    let seed = cfg.seed;

    let adjoint = map_ordered((0..c.samples).collect(), cfg.jobs, |i| -> anisns::Result<AdjointRow> {
        let s = seed.wrapping_add(3 * i as u64);
        let phi = random_field(s, true);
        let f = random_field(s.wrapping_add(1), false);
        let h = random_field(s.wrapping_add(2), false);
        let rc = adjoint_residual(&phi, &f.to_field(coarse), &h.to_field(coarse))?;
        let rf = adjoint_residual(&phi, &f.to_field(fine), &h.to_field(fine))?;
        Ok(AdjointRow {
            sample: i,
            seed: s,
            phi_div_l2: divergence(&phi.to_field(fine)).l2_norm(),
            residual_coarse: rc,
            residual_fine: rf,
            order: (rc / rf).log2(),
        })
    })?
    .into_iter()
    .collect::<anisns::Result<Vec<_>>>()?;
    art.csv("adjoint.csv", &adjoint)?;
    // ensemble order; a triple that is adjoint to roundoff on both grids carries no order of its own
    let order = (adjoint.iter().map(|r| r.residual_coarse).sum::<f64>()
        / adjoint.iter().map(|r| r.residual_fine).sum::<f64>())
    .log2();
    let per_triple: Vec<f64> = adjoint.iter().filter(|r| r.residual_coarse > 1e-12).map(|r| r.order).collect();
    let min_order = per_triple.iter().copied().fold(f64::INFINITY, f64::min);
    let non_solenoidal = adjoint.iter().filter(|r| r.phi_div_l2 > 1e-6).count();

    let key_seed = seed.wrapping_add(3 * c.samples as u64);
    let reports = map_ordered((0..c.samples).collect(), cfg.jobs, |i| -> anisns::Result<_> {
        let f = random_field(key_seed.wrapping_add(i as u64), false);
        Ok((
            key_estimate_report(&ens, visc, &f.to_field(coarse), c.delta)?,
            key_estimate_report(&ens, visc, &f.to_field(fine), c.delta)?,
        ))
    })?
    .into_iter()
    .collect::<anisns::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (i, (a, b)) in reports.iter().enumerate() {
        rows.extend(key_rows(&grid_label(coarse), i, a));
        rows.extend(key_rows(&grid_label(fine), i, b));
    }
    art.csv("key_estimate.csv", &rows)?;
    let c_coarse = max_of(reports.iter().map(|r| r.0.c_delta()));
    let c_fine = max_of(reports.iter().map(|r| r.1.c_delta()));
    let change = if c_coarse == 0.0 && c_fine == 0.0 { 0.0 } else { (c_fine / c_coarse - 1.0).abs() };
    let c_square = max_of(reports.iter().flat_map(|r| [r.0.c_square(), r.1.c_square()]));
    let allowed = c_coarse * (1.0 + c.c_delta_tolerance);
    let violations = reports.iter().filter(|r| r.1.violates(allowed, c.square_constant)).count();

    let checks = vec![
        Check::at_least("adjoint_order", order, c.min_order),
        Check::at_least("non_solenoidal_phi", non_solenoidal as f64, 1.0),
        Check::at_most("c_delta_relative_change", change, c.c_delta_tolerance),
        Check::at_most("fine_grid_violations", violations as f64, 0.0),
        Check::at_most("c_square_max", c_square, c.square_constant),
    ];
    let results = json!({
        "grids": [grid_label(coarse), grid_label(fine)],
        "adjoint_order": order,
        "adjoint_min_triple_order": min_order,
        "triples_below_min_order": per_triple.iter().filter(|&&o| o < c.min_order).count(),
        "triples_adjoint_to_roundoff": adjoint.len() - per_triple.len(),
        "adjoint_max_residual_fine": max_of(adjoint.iter().map(|r| r.residual_fine)),
        "c_delta_coarse": c_coarse,
        "c_delta_fine": c_fine,
        "c_square_max": c_square,
        "delta": c.delta,
    });
    Ok(SuiteOutput { checks, results })
}

#[derive(Serialize)]
struct CorrectorNormRow {
    theta_nu_z: f64,
    corrector_l2: f64,
}

#[derive(Serialize)]
struct HardyRow {
    field: &'static str,
    norm: HardyNorm,
    nz_coarse: usize,
    ratio_coarse: f64,
    nz_fine: usize,
    ratio_fine: f64,
    relative_change: f64,
}

type TestField = fn(usize, [f64; 3]) -> f64;

/// Fields vanishing on both plates for the Hardy inequality.
const HARDY_FIELDS: [(&str, TestField); 3] = [
    ("sin2_horizontal", |c, p| if c < 2 { (PI * p[2]).sin().powi(2) * (2.0 * PI * p[0]).cos() } else { 0.0 }),
    ("bump_tangential", |c, p| if c == 0 { p[2] * (1.0 - p[2]) * (2.0 * PI * p[1]).sin() } else { 0.0 }),
    ("sin_normal", |c, p| if c == 2 { (PI * p[2]).sin() * (1.0 + 0.5 * (2.0 * PI * p[0]).cos()) } else { 0.0 }),
];

/// Boundary-layer profile scalings, the corrector norm and the Hardy checks.
pub fn corrector_sweep(cfg: &RunConfig, art: &mut Artifacts) -> Result<SuiteOutput> {
    let c = &cfg.corrector_sweep;
    let thetas = log_space(c.theta_nu_min, c.theta_nu_max, c.points);
    let table = profile_slopes(&thetas)?;
    art.csv("norm_samples.csv", &table.samples)?;
    art.csv("slopes.csv", &table.slopes)?;
    let decades = (c.theta_nu_max / c.theta_nu_min).log10();
    let mut checks = vec![Check::at_least("decades", decades, c.min_decades)];
    for r in &table.slopes {
        checks.push(Check::at_most(format!("slope_{}", r.norm_name), (r.fitted - r.expected).abs(), c.slope_tolerance));
    }

    let grid = cfg.grid()?;
    let w0 = initial_state(&cfg.initial_spec(), grid)?;
    let traces = trace_data(&w0);
    let norms = thetas
        .iter()
        .map(|&t| {
            Ok(CorrectorNormRow {
                theta_nu_z: t,
                corrector_l2: corrector_l2_sq(&traces, &vertical_profile(1.0, t)?).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    art.csv("corrector_norm.csv", &norms)?;
    let b_slope = loglog_slope(&thetas, &norms.iter().map(|r| r.corrector_l2).collect::<Vec<_>>());
    checks.push(Check::at_most("slope_corrector_l2", (b_slope - 0.25).abs(), c.slope_tolerance));

    let fine = Grid::new(grid.nx, grid.ny, 2 * grid.nz)?;
    let mut hardy = Vec::new();
    for (name, f) in HARDY_FIELDS {
        for norm in [HardyNorm::L2, HardyNorm::Linf] {
            let ratio = |g: Grid| hardy_check(&VectorField::from_fn(g, f), norm).map(|r| r.ratio);
            let (a, b) = (ratio(grid)?, ratio(fine)?);
            let row = HardyRow {
                field: name,
                norm,
                nz_coarse: grid.nz,
                ratio_coarse: a,
                nz_fine: fine.nz,
                ratio_fine: b,
                relative_change: (b / a - 1.0).abs(),
            };
            checks.push(Check::at_most(format!("hardy_{name}_{norm:?}"), row.relative_change, c.hardy_tolerance));
            hardy.push(row);
        }
    }
    art.csv("hardy.csv", &hardy)?;
    let results = json!({
        "max_slope_deviation": table.max_deviation(),
        "corrector_l2_slope": b_slope,
        "decades": decades,
        "max_hardy_change": max_of(hardy.iter().map(|h| h.relative_change)),
    });
    Ok(SuiteOutput { checks, results })
}

/// Zero-noise decay of `(sin πz, 0, 0)` against the closed form.
pub fn heat_test(cfg: &RunConfig, art: &mut Artifacts) -> Result<SuiteOutput> {
    let c = &cfg.heat_test;
    let r = heat_decay_run(cfg.grid()?, cfg.visc()?, cfg.dt()?, cfg.horizon()?)?;
    art.csv("diagnostics.csv", &diag_rows(&r.diagnostics))?;
    let mut checks = vec![
        Check::below("relative_l2_error", r.rel_error, c.rel_tolerance),
        Check::at_most("budget_max_abs", r.budget_max_abs, c.budget_tolerance),
    ];
    checks.extend(residual_checks(cfg, r.max_div_rel, r.max_trace_rel));
    let results = json!({
        "relative_l2_error": r.rel_error,
        "exact_factor": r.exact_factor,
        "budget_max_abs": r.budget_max_abs,
        "steps": r.diagnostics.records.len() - 1,
    });
    Ok(SuiteOutput { checks, results })
}

/// Itô scheme against the Stratonovich-Heun oracle, and the noisy energy ledger.
pub fn ito_strat(cfg: &RunConfig, art: &mut Artifacts) -> Result<SuiteOutput> {
    let c = &cfg.ito_strat;
    let grid = cfg.grid()?;
    let (visc, ens, horizon) = (cfg.visc()?, cfg.ensemble()?, cfg.horizon()?);
    if ens.is_empty() {
        bail!("ito-strat needs at least one noise mode");
    }
    let u0 = initial_state(&cfg.initial_spec(), grid)?;
    let dts = c.dts(cfg.dt()?);
    let study = ito_strat_study(&u0, visc, &ens, &dts, horizon, c.paths, cfg.seed, cfg.jobs)?;
    art.csv("gaps.csv", &study.rows)?;
    let budget = energy_budget_study(&u0, visc, &ens, &dts, horizon, c.budget_paths, cfg.seed, cfg.jobs)?;
    art.csv("budget.csv", &budget.rows)?;
    let mut checks = vec![
        Check::at_least("gap_order", study.order, c.min_order),
        Check::at_most("ablated_gap_order", study.ablated_order, c.max_ablated_order),
        Check::at_least("budget_order", budget.order, c.min_budget_order),
    ];
    checks.extend(residual_checks(
        cfg,
        study.max_div_rel.max(budget.max_div_rel),
        study.max_trace_rel.max(budget.max_trace_rel),
    ));
    let results = json!({
        "dts": dts,
        "gap_order": study.order,
        "ablated_gap_order": study.ablated_order,
        "budget_order": budget.order,
    });
    Ok(SuiteOutput { checks, results })
}

#[derive(Serialize)]
struct EnergyRow {
    time: f64,
    l2_sq: f64,
    relative_change: f64,
    div_rel: f64,
    trace_rel: f64,
}

/// Reference Euler trajectory, its energy record and plate-trace bounds.
pub fn euler_run(cfg: &RunConfig, art: &mut Artifacts) -> Result<SuiteOutput> {
    let c = &cfg.euler_run;
    let w0 = initial_state(&cfg.initial_spec(), cfg.grid()?)?;
    let traj = run_euler(&w0, &EulerConfig { dt: cfg.dt()?, horizon: cfg.horizon()?, sample_every: c.sample_every })?;
    let e0 = anisns::calculus::l2_norm_sq(&traj.states[0]);
    let energy: Vec<EnergyRow> = traj
        .states
        .iter()
        .zip(&traj.times)
        .map(|(s, &time)| {
            let l2_sq = anisns::calculus::l2_norm_sq(s);
            let (div_rel, trace_rel) = state_residuals(s);
            EnergyRow { time, l2_sq, relative_change: l2_sq / e0 - 1.0, div_rel, trace_rel }
        })
        .collect();
    art.csv("energy.csv", &energy)?;
    let bounds = trace_bounds_report(&traj)?;
    art.csv("trace_bounds.csv", &bounds)?;
    if c.save_trajectory {
        save_trajectory(&art.path("trajectory"), &traj)?;
        art.note(&format!("trajectory/{INDEX_FILE}"));
    }
    let drift = traj.energy_drift();
    let max_ratio =
        bounds.iter().map(|b| b.ratio).fold(0.0, |m: f64, r| if r.is_finite() { m.max(r) } else { f64::INFINITY });
    let mut checks = vec![
        Check::at_most("energy_drift", drift, c.max_energy_drift),
        Check::at_most("trace_bound_ratio", max_ratio, c.max_trace_ratio),
    ];
    checks.extend(residual_checks(
        cfg,
        max_of(energy.iter().map(|e| e.div_rel)),
        max_of(energy.iter().map(|e| e.trace_rel)),
    ));
    let results = json!({
        "states": traj.states.len(),
        "steps": traj.steps(),
        "energy_drift": drift,
        "trace_bound_ratio_max": max_ratio,
    });
    Ok(SuiteOutput { checks, results })
}

#[derive(Serialize)]
struct SweepCsvRow {
    k: u32,
    nu_h: f64,
    nu_z: f64,
    completed: usize,
    aborted: usize,
    dropped: bool,
    sup_err_sq_mean: f64,
    sup_err_sq_stderr: Option<f64>,
    sup_v_sq_mean: f64,
    sup_v_sq_stderr: Option<f64>,
    diss_h_mean: f64,
    diss_h_stderr: Option<f64>,
    diss_z_mean: f64,
    diss_z_stderr: Option<f64>,
    kato_full_mean: f64,
    kato_full_stderr: Option<f64>,
    kato_tan_mean: f64,
    kato_tan_stderr: Option<f64>,
    sup_l2_sq_mean: f64,
    kato_delta: f64,
    kato_below_resolution: bool,
    eps: f64,
    theta: f64,
    sup_b: f64,
}

#[derive(Serialize)]
struct PathCsvRow {
    k: u32,
    sample: usize,
    stream: u64,
    aborted: String,
    sup_err_sq: f64,
    sup_v_sq: f64,
    sup_b: f64,
    sup_l2_sq: f64,
    diss_h: f64,
    diss_z: f64,
    kato_full: f64,
    kato_tan: f64,
    max_div_rel: f64,
    max_trace_rel: f64,
}

#[derive(Serialize)]
struct PlotRow {
    k: u32,
    mean: f64,
    stderr: Option<f64>,
}

#[derive(Serialize)]
struct TrendRow<'a> {
    quantity: &'a str,
    spearman: f64,
    first_mean: f64,
    last_mean: f64,
    last_over_first: f64,
}

fn estimate(row: &anisns::experiments::SweepRow, q: &str) -> Estimate {
    match q {
        "sup_err_sq" => row.sup_err_sq,
        "sup_v_sq" => row.sup_v_sq,
        "diss_h" => row.diss_h,
        "diss_z" => row.diss_z,
        "kato_full" => row.kato_full,
        "kato_tan" => row.kato_tan,
        _ => row.sup_l2_sq,
    }
}

fn write_sweep(art: &mut Artifacts, res: &SweepResult) -> Result<()> {
    let rows: Vec<SweepCsvRow> = res
        .rows
        .iter()
        .map(|r| SweepCsvRow {
            k: r.k,
            nu_h: r.nu_h,
            nu_z: r.nu_z,
            completed: r.completed,
            aborted: r.aborted,
            dropped: r.dropped,
            sup_err_sq_mean: r.sup_err_sq.mean,
            sup_err_sq_stderr: r.sup_err_sq.stderr,
            sup_v_sq_mean: r.sup_v_sq.mean,
            sup_v_sq_stderr: r.sup_v_sq.stderr,
            diss_h_mean: r.diss_h.mean,
            diss_h_stderr: r.diss_h.stderr,
            diss_z_mean: r.diss_z.mean,
            diss_z_stderr: r.diss_z.stderr,
            kato_full_mean: r.kato_full.mean,
            kato_full_stderr: r.kato_full.stderr,
            kato_tan_mean: r.kato_tan.mean,
            kato_tan_stderr: r.kato_tan.stderr,
            sup_l2_sq_mean: r.sup_l2_sq.mean,
            kato_delta: r.kato_delta,
            kato_below_resolution: r.kato_below_resolution,
            eps: r.eps,
            theta: r.theta,
            sup_b: r.sup_b,
        })
        .collect();
    art.csv("sweep.csv", &rows)?;
    let paths: Vec<PathCsvRow> = res
        .paths
        .iter()
        .map(|p| PathCsvRow {
            k: p.k,
            sample: p.sample,
            stream: p.stream,
            aborted: p.aborted.clone().unwrap_or_default(),
            sup_err_sq: p.sup_err_sq,
            sup_v_sq: p.sup_v_sq,
            sup_b: p.sup_b,
            sup_l2_sq: p.sup_l2_sq,
            diss_h: p.diss_h,
            diss_z: p.diss_z,
            kato_full: p.kato.full,
            kato_tan: p.kato.tangential,
            max_div_rel: p.max_div_rel,
            max_trace_rel: p.max_trace_rel,
        })
        .collect();
    art.csv("paths.csv", &paths)?;
    for q in TRACKED.iter().copied().chain(["sup_v_sq"]) {
        let plot: Vec<PlotRow> = res
            .rows
            .iter()
            .filter(|r| !r.dropped)
            .map(|r| {
                let e = estimate(r, q);
                PlotRow { k: r.k, mean: e.mean, stderr: e.stderr }
            })
            .collect();
        art.csv(&format!("plot_{q}.csv"), &plot)?;
    }
    let trends: Vec<TrendRow> = res
        .trends
        .iter()
        .map(|t| TrendRow {
            quantity: &t.quantity,
            spearman: t.spearman,
            first_mean: t.first_mean,
            last_mean: t.last_mean,
            last_over_first: t.last_mean / t.first_mean,
        })
        .collect();
    art.csv("trends.csv", &trends)?;
    for (p, d) in res.paths.iter().zip(&res.diagnostics) {
        art.csv(&format!("paths/k{}_s{}.csv", p.k, p.sample), &diag_rows(d))?;
    }
    Ok(())
}

fn reference_trajectory(cfg: &RunConfig) -> Result<EulerTrajectory> {
    let plan = cfg.sweep_plan()?;
    match &cfg.inviscid_sweep.trajectory {
        Some(dir) => {
            let t = load_trajectory(dir)?;
            if t.grid() != plan.grid()? || t.dt != plan.dt || t.sample_every != plan.sample_every {
                bail!("trajectory in {} does not match the sweep grid, dt and sample_every", dir.display());
            }
            Ok(t)
        }
        None => Ok(run_euler(&initial_state(&plan.initial, plan.grid()?)?, &plan.euler_config())?),
    }
}

/// The inviscid-limit sweep with its trend checks.
pub fn inviscid_sweep(cfg: &RunConfig, art: &mut Artifacts) -> Result<SuiteOutput> {
    let c = &cfg.inviscid_sweep;
    let plan = cfg.sweep_plan()?;
    let traj = reference_trajectory(cfg)?;
    let res = sweep_against(&plan, &traj, cfg.jobs)?;
    write_sweep(art, &res)?;
    art.json("result.json", &SweepResult { diagnostics: Vec::new(), ..res.clone() })?;

    let triangle = res
        .paths
        .iter()
        .filter(|p| p.aborted.is_none())
        .filter(|p| p.sup_err_sq.sqrt() > (p.sup_v_sq.sqrt() + p.sup_b) * (1.0 + 1e-12))
        .count();
    let kept = res.rows.iter().filter(|r| !r.dropped).count();
    let mut checks = vec![
        Check::at_least("levels_kept", kept as f64, 2.0),
        Check::at_most("triangle_violations", triangle as f64, 0.0),
    ];
    checks.extend(residual_checks(cfg, res.max_div_rel, res.max_trace_rel));
    if !plan.control {
        for q in ["sup_err_sq", "diss_h", "diss_z", "kato_tan"] {
            let t = res.trend(q).expect("tracked quantity");
            checks.push(Check::at_most(format!("spearman_{q}"), t.spearman, c.max_spearman));
        }
        for q in ["sup_err_sq", "diss_h", "diss_z"] {
            let t = res.trend(q).expect("tracked quantity");
            checks.push(Check::at_most(
                format!("last_over_first_{q}"),
                t.last_mean / t.first_mean,
                c.max_last_over_first,
            ));
        }
    }
    let results = json!({
        "control": plan.control,
        "trends": res.trends,
        "euler_energy_drift": res.euler_energy_drift,
        "aborted_paths": res.paths.iter().filter(|p| p.aborted.is_some()).count(),
        "dropped_levels": res.rows.iter().filter(|r| r.dropped).map(|r| r.k).collect::<Vec<_>>(),
    });
    Ok(SuiteOutput { checks, results })
}
