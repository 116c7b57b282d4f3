//! Browser bindings for three small computations of the core crate.
//!
//! Each export has a plain Rust twin returning `Result<_, String>` so the
//! logic also runs (and is tested) natively.

use anisns::analytic::random_field;
use anisns::calculus::{divergence, l2_norm};
use anisns::corrector::{vertical_profile, NORM_EXPONENTS, NORM_NAMES};
use anisns::experiments::heat_decay_run;
use anisns::{leray_project, Grid, ViscosityPair};
use wasm_bindgen::prelude::*;

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Bottom profile on `[0, 1/2]`: rows `(z, m, M^z)` flattened.
pub fn profile_rows(theta: f64, nu_z: f64, samples: usize) -> Result<Vec<f64>, String> {
    let p = vertical_profile(theta, nu_z).map_err(|e| e.to_string())?;
    let n = samples.max(2);
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let z = 0.5 * i as f64 / (n - 1) as f64;
        let (mz, m, _) = p.eval(z);
        out.extend([z, m, mz]);
    }
    Ok(out)
}

/// The eight profile norms followed by their expected exponents in `θν_z`.
pub fn profile_norms(theta: f64, nu_z: f64) -> Result<Vec<f64>, String> {
    let p = vertical_profile(theta, nu_z).map_err(|e| e.to_string())?;
    Ok(p.norms().into_iter().chain(NORM_EXPONENTS).collect())
}

/// Zero-noise decay of `(sin πz, 0, 0)` on a `4×4×nz` grid: rows
/// `(t, ‖u‖², closed form)` flattened, then the final relative error.
pub fn heat_rows(nz: usize, nu_z: f64, dt: f64, horizon: f64) -> Result<Vec<f64>, String> {
    let grid = Grid::new(4, 4, nz).map_err(|e| e.to_string())?;
    let visc = ViscosityPair::new(nu_z, nu_z).map_err(|e| e.to_string())?;
    let r = heat_decay_run(grid, visc, dt, horizon).map_err(|e| e.to_string())?;
    let e0 = r.diagnostics.records[0].l2_sq;
    let rate = 2.0 * nu_z * std::f64::consts::PI.powi(2);
    let mut out = Vec::with_capacity(3 * r.diagnostics.records.len() + 1);
    for rec in &r.diagnostics.records {
        out.extend([rec.time, rec.l2_sq, e0 * (-rate * rec.time).exp()]);
    }
    out.push(r.rel_error);
    Ok(out)
}

/// Leray projection of a random field: `(‖f‖, ‖div f‖, ‖Pf‖, ‖div Pf‖, max |Pf·n| on the plates)`.
pub fn projection_stats(n: usize, seed: u64) -> Result<Vec<f64>, String> {
    let grid = Grid::new(n, n, n).map_err(|e| e.to_string())?;
    let f = random_field(seed, false).to_field(grid);
    let p = leray_project(&f).map_err(|e| e.to_string())?;
    Ok(vec![l2_norm(&f), divergence(&f).l2_norm(), l2_norm(&p), divergence(&p).l2_norm(), p.normal_trace_max()])
}

#[wasm_bindgen(js_name = profileRows)]
pub fn profile_rows_js(theta: f64, nu_z: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    js(profile_rows(theta, nu_z, samples))
}

#[wasm_bindgen(js_name = profileNorms)]
pub fn profile_norms_js(theta: f64, nu_z: f64) -> Result<Vec<f64>, JsError> {
    js(profile_norms(theta, nu_z))
}

#[wasm_bindgen(js_name = normNames)]
pub fn norm_names() -> Vec<String> {
    NORM_NAMES.iter().map(|s| s.to_string()).collect()
}

#[wasm_bindgen(js_name = heatRows)]
pub fn heat_rows_js(nz: usize, nu_z: f64, dt: f64, horizon: f64) -> Result<Vec<f64>, JsError> {
    js(heat_rows(nz, nu_z, dt, horizon))
}

#[wasm_bindgen(js_name = projectionStats)]
pub fn projection_stats_js(n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    js(projection_stats(n, seed))
}
