//! Incompressible Euler reference solution with impermeable plates.

use serde::{Deserialize, Serialize};

use crate::advection::nonlinear_term;
use crate::analytic::{AnalyticField, FieldSpec, Term};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::Grid;
use crate::projection::leray_project;

/// `-B(w, w)`.
pub fn euler_rhs(w: &VectorField) -> Result<VectorField> {
    let mut b = nonlinear_term(w, w)?;
    b.scale(-1.0);
    Ok(b)
}

/// Largest stable step `0.5 min(h) / max|w|`.
pub fn cfl_limit(w: &VectorField) -> f64 {
    let m = w.max_abs();
    if m == 0.0 {
        f64::INFINITY
    } else {
        0.5 * w.grid.min_spacing() / m
    }
}

/// One classical RK4 step, re-projected.
pub fn step_euler(w: &VectorField, dt: f64) -> Result<VectorField> {
    let limit = cfl_limit(w);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::Cfl { dt, limit });
    }
    let k1 = euler_rhs(w)?;
    let k2 = euler_rhs(&w.add(&k1.scaled(0.5 * dt)))?;
    let k3 = euler_rhs(&w.add(&k2.scaled(0.5 * dt)))?;
    let k4 = euler_rhs(&w.add(&k3.scaled(dt)))?;
    let mut next = w.clone();
    next.axpy(dt / 6.0, &k1);
    next.axpy(dt / 3.0, &k2);
    next.axpy(dt / 3.0, &k3);
    next.axpy(dt / 6.0, &k4);
    next.ensure_finite("euler state")?;
    leray_project(&next)
}

/// Default Euler initial datum before projection:
/// `u^1 = 0.5 cos 2πy (1 + 0.5 cos πz) - 0.125 sin 2πx cos πz`,
/// `u^2 = 0.5 cos 2πx (1 + 0.5 cos πz)`, `u^3 = 0.25 cos 2πx sin πz`.
pub fn default_initial_spec() -> FieldSpec {
    FieldSpec {
        u1: vec![
            Term::new(0.5, "1", "cos(1)", "1"),
            Term::new(0.25, "1", "cos(1)", "cospi(1)"),
            Term::new(-0.125, "sin(1)", "1", "cospi(1)"),
        ],
        u2: vec![Term::new(0.5, "cos(1)", "1", "1"), Term::new(0.25, "cos(1)", "1", "cospi(1)")],
        u3: vec![Term::new(0.25, "cos(1)", "1", "sinpi(1)")],
    }
}

/// Sample an analytic datum and project it.
pub fn initial_state(spec: &FieldSpec, grid: Grid) -> Result<VectorField> {
    leray_project(&AnalyticField::new(spec.clone())?.to_field(grid))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Store one state every `sample_every` steps.
    pub sample_every: usize,
}

/// Sampled Euler solution on `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct EulerTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<VectorField>,
    pub horizon: f64,
    pub dt: f64,
    pub sample_every: usize,
}

impl EulerTrajectory {
    pub fn grid(&self) -> Grid {
        self.states[0].grid
    }

    pub fn steps(&self) -> usize {
        step_count(self.horizon, self.dt)
    }

    /// State after step `step`, which must be a stored sample.
    pub fn at_step(&self, step: usize) -> Result<&VectorField> {
        if !step.is_multiple_of(self.sample_every) && step != self.steps() {
            return Err(Error::Misaligned);
        }
        let idx = step.div_ceil(self.sample_every);
        self.states.get(idx).ok_or(Error::Misaligned)
    }

    /// `max_t |‖w_t‖² / ‖w_0‖² - 1|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = crate::calculus::l2_norm_sq(&self.states[0]);
        self.states.iter().map(|s| (crate::calculus::l2_norm_sq(s) / e0 - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Number of steps of size `dt` needed to reach `horizon`.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    (horizon / dt - 1e-9).ceil().max(0.0) as usize
}

/// Integrate from `w0`, storing every `sample_every`-th state and the final one.
pub fn run_euler(w0: &VectorField, cfg: &EulerConfig) -> Result<EulerTrajectory> {
    if cfg.sample_every == 0 {
        return Err(Error::Precondition("sample_every must be at least 1".into()));
    }
    let n = step_count(cfg.horizon, cfg.dt);
    let mut w = leray_project(w0)?;
    let mut times = vec![0.0];
    let mut states = vec![w.clone()];
    for step in 1..=n {
        w = step_euler(&w, cfg.dt)?;
        if step % cfg.sample_every == 0 || step == n {
            times.push(step as f64 * cfg.dt);
            states.push(w.clone());
        }
    }
    Ok(EulerTrajectory { times, states, horizon: cfg.horizon, dt: cfg.dt, sample_every: cfg.sample_every })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{divergence, inner_product, l2_norm, l2_norm_sq};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(16, 16, 16).unwrap()
    }

    #[test]
    fn zero_and_shear_are_steady() {
        let g = grid();
        assert_eq!(euler_rhs(&VectorField::zeros(g)).unwrap().max_abs(), 0.0);
        let shear = VectorField::from_fn(g, |c, p| if c == 0 { (PI * p[2]).cos() } else { 0.0 });
        assert!(euler_rhs(&shear).unwrap().max_abs() < 1e-12);
        let next = step_euler(&shear, 1e-2).unwrap();
        assert!(next.sub(&shear).max_abs() < 1e-12);
    }

    #[test]
    fn rhs_does_no_work() {
        let w = initial_state(&default_initial_spec(), grid()).unwrap();
        let r = inner_product(&euler_rhs(&w).unwrap(), &w).unwrap();
        assert!(r.abs() <= 1e-8 * l2_norm(&w).powi(3));
    }

    #[test]
    fn cfl_violation_reported() {
        let w = initial_state(&default_initial_spec(), grid()).unwrap();
        assert!(matches!(step_euler(&w, 1.0), Err(Error::Cfl { .. })));
    }

    #[test]
    fn one_step_defect_is_high_order() {
        let w = initial_state(&default_initial_spec(), grid()).unwrap();
        let defect = |dt: f64| {
            let one = step_euler(&w, dt).unwrap();
            let two = step_euler(&step_euler(&w, dt / 2.0).unwrap(), dt / 2.0).unwrap();
            l2_norm(&one.sub(&two))
        };
        let ratio = defect(0.02) / defect(0.01);
        assert!(ratio > 16.0, "{ratio}");
    }

    #[test]
    fn trajectory_conserves_energy_and_stays_solenoidal() {
        let g = Grid::new(16, 16, 17).unwrap();
        let w0 = initial_state(&default_initial_spec(), g).unwrap();
        let traj = run_euler(&w0, &EulerConfig { dt: 2e-3, horizon: 0.1, sample_every: 10 }).unwrap();
        assert_eq!(traj.times.len(), 6);
        assert!(traj.energy_drift() < 1e-6);
        for s in &traj.states {
            assert!(divergence(s).l2_norm() <= 1e-9 * l2_norm(s));
            assert_eq!(s.normal_trace_max(), 0.0);
        }
        assert!(traj.at_step(20).is_ok());
        assert!(matches!(traj.at_step(3), Err(Error::Misaligned)));
        assert!(l2_norm_sq(&traj.states[5]) > 0.0);
    }
}
