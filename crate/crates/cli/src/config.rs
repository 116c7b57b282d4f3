//! Run configuration: TOML file, command-line overrides and per-command defaults.
//!
//! Precedence is flag > file > command default. Unknown keys anywhere are errors.
//! [`RunConfig::resolve`] fills every default the command uses, so a resolved
//! config is a complete record of the run.

use std::fmt;
use std::path::{Path, PathBuf};

use anisns::analytic::FieldSpec;
use anisns::corrector::ThetaRule;
use anisns::euler::default_initial_spec;
use anisns::experiments::{control_levels, default_levels, SweepLevel, SweepPlan};
use anisns::noise::{default_specs, NoiseEnsemble};
use anisns::{Grid, ViscosityPair};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 20240531;
/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "ANISNS_OUT";
pub const DEFAULT_OUT_ROOT: &str = "anisns-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Identities,
    CorrectorSweep,
    HeatTest,
    ItoStrat,
    EulerRun,
    InviscidSweep,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Identities,
        Command::CorrectorSweep,
        Command::HeatTest,
        Command::ItoStrat,
        Command::EulerRun,
        Command::InviscidSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::CorrectorSweep => "corrector-sweep",
            Command::HeatTest => "heat-test",
            Command::ItoStrat => "ito-strat",
            Command::EulerRun => "euler-run",
            Command::InviscidSweep => "inviscid-sweep",
        }
    }

    fn defaults(self) -> Defaults {
        let d = |grid, dt, horizon, visc| Defaults { grid, dt, horizon, visc };
        match self {
            Command::Identities => d([16, 16, 16], None, None, Some((0.25, 0.0625))),
            Command::CorrectorSweep => d([8, 8, 32], None, None, None),
            Command::HeatTest => d([8, 8, 64], Some(1e-4), Some(0.1), Some((0.1, 0.1))),
            Command::ItoStrat => d([16, 16, 17], Some(1e-4), Some(0.1), Some((0.25, 0.0625))),
            Command::EulerRun | Command::InviscidSweep => d([32, 32, 33], Some(1e-3), Some(0.5), None),
        }
    }

    fn uses_initial(self) -> bool {
        matches!(self, Command::EulerRun | Command::InviscidSweep | Command::ItoStrat)
    }

    fn uses_noise(self) -> bool {
        matches!(self, Command::Identities | Command::ItoStrat | Command::InviscidSweep)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

struct Defaults {
    grid: [usize; 3],
    dt: Option<f64>,
    horizon: Option<f64>,
    visc: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViscosityConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_z: Option<f64>,
}

/// Noise ensemble. Absent `modes` means the four-mode default; `modes = []` means no noise.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<FieldSpec>>,
}

/// Relative residual bounds applied to every emitted state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub div_rel: f64,
    pub trace_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { div_rel: 1e-9, trace_rel: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesConfig {
    /// Random triples and random fields per check.
    pub samples: usize,
    pub delta: f64,
    pub min_order: f64,
    pub c_delta_tolerance: f64,
    /// Constant in `⟨G̃f,f⟩² ≤ c ‖ξ̃‖²_{W^{1,∞}} ‖f‖⁴`.
    pub square_constant: f64,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig { samples: 50, delta: 0.1, min_order: 1.9, c_delta_tolerance: 0.2, square_constant: 20.25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectorSweepConfig {
    pub theta_nu_min: f64,
    pub theta_nu_max: f64,
    pub points: usize,
    pub slope_tolerance: f64,
    pub min_decades: f64,
    pub hardy_tolerance: f64,
}

impl Default for CorrectorSweepConfig {
    fn default() -> Self {
        CorrectorSweepConfig {
            theta_nu_min: 1e-9,
            theta_nu_max: 1e-5,
            points: 9,
            slope_tolerance: 0.05,
            min_decades: 3.0,
            hardy_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatTestConfig {
    pub rel_tolerance: f64,
    pub budget_tolerance: f64,
}

impl Default for HeatTestConfig {
    fn default() -> Self {
        HeatTestConfig { rel_tolerance: 1e-2, budget_tolerance: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ItoStratConfig {
    pub paths: usize,
    /// Step sizes are `dt · 2^r` for `r < refinements`.
    pub refinements: u32,
    pub min_order: f64,
    pub max_ablated_order: f64,
    pub budget_paths: usize,
    pub min_budget_order: f64,
}

impl Default for ItoStratConfig {
    fn default() -> Self {
        ItoStratConfig {
            paths: 8,
            refinements: 3,
            min_order: 0.9,
            max_ablated_order: 0.2,
            budget_paths: 4,
            min_budget_order: 0.9,
        }
    }
}

impl ItoStratConfig {
    /// Coarsest first.
    pub fn dts(&self, finest: f64) -> Vec<f64> {
        (0..self.refinements).rev().map(|r| finest * f64::from(1u32 << r)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EulerRunConfig {
    pub sample_every: usize,
    pub save_trajectory: bool,
    pub max_energy_drift: f64,
    pub max_trace_ratio: f64,
}

impl Default for EulerRunConfig {
    fn default() -> Self {
        EulerRunConfig { sample_every: 10, save_trajectory: true, max_energy_drift: 1e-5, max_trace_ratio: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sequence {
    /// `ν_h = 2^{-k}`, `ν_z = 4^{-k}`
    #[default]
    Default,
    /// `ν_h = ν_z = 2^{-k}`; requires `control = true`
    Control,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub sequence: Sequence,
    pub levels: u32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub custom: Vec<SweepLevel>,
    pub samples: usize,
    pub sample_every: usize,
    pub control: bool,
    pub per_path_csv: bool,
    /// Directory written by `euler-run`; computed in-process when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    pub max_spearman: f64,
    pub max_last_over_first: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sequence: Sequence::Default,
            levels: 6,
            custom: Vec::new(),
            samples: 8,
            sample_every: 10,
            control: false,
            per_path_csv: false,
            trajectory: None,
            max_spearman: -0.8,
            max_last_over_first: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<FieldSpec>,
    #[serde(default)]
    pub viscosity: ViscosityConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub corrector: ThetaRule,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub identities: IdentitiesConfig,
    #[serde(default)]
    pub corrector_sweep: CorrectorSweepConfig,
    #[serde(default)]
    pub heat_test: HeatTestConfig,
    #[serde(default)]
    pub ito_strat: ItoStratConfig,
    #[serde(default)]
    pub euler_run: EulerRunConfig,
    #[serde(default)]
    pub inviscid_sweep: SweepConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

/// Values given on the command line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub grid: Option<[usize; 3]>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
}

/// Parse `NX,NY,NZ`.
pub fn parse_grid(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected NX,NY,NZ, got '{s}'"));
    }
    let mut g = [0; 3];
    for (slot, p) in g.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| format!("'{p}' is not a grid size"))?;
    }
    Ok(g)
}

pub fn from_toml(text: &str) -> Result<RunConfig> {
    Ok(toml::from_str(text)?)
}

/// Read the optional file and apply flag overrides. The result is not yet resolved.
pub fn parse_config(path: Option<&Path>, flags: &Overrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            from_toml(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => RunConfig::default(),
    };
    cfg.apply(flags);
    Ok(cfg)
}

impl RunConfig {
    pub fn apply(&mut self, flags: &Overrides) {
        if let Some(o) = &flags.out {
            self.out = Some(o.clone());
        }
        if let Some(s) = flags.seed {
            self.seed = s;
        }
        if let Some(j) = flags.jobs {
            self.jobs = Some(j);
        }
        if let Some(g) = flags.grid {
            self.grid = Some(g);
        }
        if let Some(d) = flags.dt {
            self.dt = Some(d);
        }
        if let Some(h) = flags.horizon {
            self.horizon = Some(h);
        }
    }

    /// Fill every default `cmd` uses and validate the result.
    pub fn resolve(&self, cmd: Command) -> Result<RunConfig> {
        let d = cmd.defaults();
        let mut r = self.clone();
        r.grid.get_or_insert(d.grid);
        if r.dt.is_none() {
            r.dt = d.dt;
        }
        if r.horizon.is_none() {
            r.horizon = d.horizon;
        }
        if let Some((h, z)) = d.visc {
            r.viscosity.nu_h.get_or_insert(h);
            r.viscosity.nu_z.get_or_insert(z);
        }
        if cmd.uses_noise() && r.noise.modes.is_none() {
            r.noise.modes = Some(default_specs());
        }
        if cmd.uses_initial() && r.initial.is_none() {
            r.initial = Some(default_initial_spec());
        }
        r.validate(cmd)?;
        Ok(r)
    }

    fn validate(&self, cmd: Command) -> Result<()> {
        self.grid()?;
        for (name, v) in [("dt", self.dt), ("horizon", self.horizon)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    bail!("{name} must be positive, got {x}");
                }
            }
        }
        if self.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        if self.viscosity.nu_h.is_some() || self.viscosity.nu_z.is_some() {
            self.visc()?;
        }
        if cmd.uses_noise() {
            self.ensemble()?;
        }
        if let Some(spec) = &self.initial {
            anisns::analytic::AnalyticField::new(spec.clone())?;
        }
        for (name, t) in [("div_rel", self.tolerances.div_rel), ("trace_rel", self.tolerances.trace_rel)] {
            if t.is_nan() || t < 0.0 {
                bail!("tolerances.{name} must be non-negative");
            }
        }
        self.corrector.validate()?;
        match cmd {
            Command::Identities => {
                if self.identities.samples == 0 {
                    bail!("identities.samples must be at least 1");
                }
            }
            Command::CorrectorSweep => {
                let c = &self.corrector_sweep;
                if !(c.theta_nu_min > 0.0 && c.theta_nu_min < c.theta_nu_max && c.theta_nu_max <= 1.0 / 64.0) {
                    bail!("corrector_sweep needs 0 < theta_nu_min < theta_nu_max <= 1/64");
                }
                if c.points < 2 {
                    bail!("corrector_sweep.points must be at least 2");
                }
            }
            Command::ItoStrat => {
                let c = &self.ito_strat;
                if c.paths == 0 || c.budget_paths == 0 || c.refinements < 2 || c.refinements > 16 {
                    bail!("ito_strat needs paths >= 1, budget_paths >= 1 and 2 <= refinements <= 16");
                }
            }
            Command::EulerRun => {
                if self.euler_run.sample_every == 0 {
                    bail!("euler_run.sample_every must be at least 1");
                }
            }
            Command::InviscidSweep => {
                self.sweep_plan()?.validate()?;
            }
            Command::HeatTest => {}
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = self.grid.context("grid is not set")?;
        Ok(Grid::new(g[0], g[1], g[2])?)
    }

    pub fn dt(&self) -> Result<f64> {
        self.dt.context("dt is not set")
    }

    pub fn horizon(&self) -> Result<f64> {
        self.horizon.context("horizon is not set")
    }

    pub fn visc(&self) -> Result<ViscosityPair> {
        let v = &self.viscosity;
        match (v.nu_h, v.nu_z) {
            (Some(h), Some(z)) => Ok(ViscosityPair::new(h, z)?),
            _ => bail!("viscosity.nu_h and viscosity.nu_z must both be set"),
        }
    }

    pub fn ensemble(&self) -> Result<NoiseEnsemble> {
        match &self.noise.modes {
            Some(m) => Ok(NoiseEnsemble::from_specs(m)?),
            None => Ok(NoiseEnsemble::from_specs(&default_specs())?),
        }
    }

    pub fn initial_spec(&self) -> FieldSpec {
        self.initial.clone().unwrap_or_else(default_initial_spec)
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let s = &self.inviscid_sweep;
        let levels = match s.sequence {
            Sequence::Default => default_levels(s.levels),
            Sequence::Control => control_levels(s.levels),
            Sequence::Custom => s.custom.clone(),
        };
        Ok(SweepPlan {
            levels,
            samples: s.samples,
            base_seed: self.seed,
            grid: self.grid.context("grid is not set")?,
            dt: self.dt()?,
            horizon: self.horizon()?,
            theta_rule: self.corrector,
            sample_every: s.sample_every,
            ensemble: self.noise.modes.clone().unwrap_or_else(default_specs),
            initial: self.initial_spec(),
            control: s.control,
            keep_diagnostics: s.per_path_csv,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// `out` if set, else `$ANISNS_OUT/<command>`, else `anisns-out/<command>`.
pub fn output_dir(cfg: &RunConfig, cmd: Command, env_root: Option<PathBuf>) -> PathBuf {
    match &cfg.out {
        Some(o) => o.clone(),
        None => env_root.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT)).join(cmd.name()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let c = from_toml("").unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.corrector, ThetaRule::Proportional { c_tilde: 0.125 });
        assert_eq!(c.inviscid_sweep.samples, 8);
        let r = c.resolve(Command::InviscidSweep).unwrap();
        assert_eq!(r.grid, Some([32, 32, 33]));
        assert_eq!(r.dt, Some(1e-3));
        assert_eq!(r.horizon, Some(0.5));
        assert_eq!(r.noise.modes.as_ref().map(Vec::len), Some(4));
        let plan = r.sweep_plan().unwrap();
        assert_eq!(plan, SweepPlan { base_seed: DEFAULT_SEED, ..SweepPlan::default() });
        let h = c.resolve(Command::HeatTest).unwrap();
        assert_eq!((h.grid, h.dt, h.horizon), (Some([8, 8, 64]), Some(1e-4), Some(0.1)));
        assert_eq!(h.noise.modes, None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "sede = 3",
            "[inviscid_sweep]\nsampels = 3",
            "[corrector]\nrule = \"proportional\"\nc_tilde = 0.1\ntheta = 1.0",
            "[noise]\nmodes = [{ u1 = [{ amp = 1.0, w = \"1\" }] }]",
            "[tolerance]\ndiv_rel = 1.0",
        ] {
            assert!(from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn hypothesis_guard_names_the_limit_hypothesis() {
        let c = from_toml("[inviscid_sweep]\nsequence = \"custom\"\ncustom = [{ k = 1, nu_h = 0.1, nu_z = 0.2 }]\n")
            .unwrap();
        let e = format!("{:#}", c.resolve(Command::InviscidSweep).unwrap_err());
        assert!(e.contains("inviscid-limit hypothesis"), "{e}");
        assert!(e.contains("nu_z^k / nu_h^k -> 0"), "{e}");
        let ctl = from_toml("[inviscid_sweep]\nsequence = \"control\"\n").unwrap();
        assert!(ctl.resolve(Command::InviscidSweep).is_err());
        let ok = from_toml(
            "[inviscid_sweep]\nsequence = \"control\"\ncontrol = true\n[corrector]\nrule = \"proportional\"\nc_tilde = 0.05\n",
        )
        .unwrap();
        assert!(ok.resolve(Command::InviscidSweep).is_ok());
    }

    #[test]
    fn flags_override_file_values() {
        let mut c = from_toml("seed = 5\ndt = 0.01\ngrid = [8, 8, 9]").unwrap();
        c.apply(&Overrides { seed: Some(11), horizon: Some(0.2), ..Default::default() });
        let r = c.resolve(Command::EulerRun).unwrap();
        assert_eq!((r.seed, r.dt, r.horizon, r.grid), (11, Some(0.01), Some(0.2), Some([8, 8, 9])));
    }

    #[test]
    fn grid_flag_parsing() {
        assert_eq!(parse_grid("16, 16,17"), Ok([16, 16, 17]));
        assert!(parse_grid("16,16").is_err());
        assert!(parse_grid("a,b,c").is_err());
    }

    #[test]
    fn resolved_configs_round_trip() {
        let base = from_toml("seed = 9\n[noise]\nmodes = []\n").unwrap();
        for cmd in Command::ALL {
            let r = base.resolve(cmd).unwrap();
            assert_eq!(from_toml(&r.to_toml().unwrap()).unwrap(), r, "{cmd}");
            let json = serde_json::to_string(&r).unwrap();
            assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), r, "{cmd}");
        }
    }

    #[test]
    fn output_directory_rules() {
        let mut c = RunConfig::default();
        assert_eq!(output_dir(&c, Command::HeatTest, None), PathBuf::from("anisns-out/heat-test"));
        assert_eq!(output_dir(&c, Command::HeatTest, Some("/r".into())), PathBuf::from("/r/heat-test"));
        c.out = Some("/x".into());
        assert_eq!(output_dir(&c, Command::HeatTest, Some("/r".into())), PathBuf::from("/x"));
    }

    #[test]
    fn ito_strat_step_sizes() {
        assert_eq!(ItoStratConfig::default().dts(1e-4), vec![4e-4, 2e-4, 1e-4]);
    }
}
