//! Run orchestration for the `anisns` binary.

pub mod artifacts;
pub mod config;
pub mod suites;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use artifacts::{
    Artifacts, Check, FailureRecord, Manifest, Summary, FAILURES_FILE, MANIFEST_FILE, SUMMARY_FILE, TIMING_FILE,
};
pub use config::{Command, Overrides, RunConfig};

/// Files that are not statistics: they may differ between otherwise identical runs.
pub const NON_STATISTICS: [&str; 2] = [MANIFEST_FILE, TIMING_FILE];

#[derive(Debug)]
pub enum RunError {
    /// The configuration was rejected before anything ran.
    Config(anyhow::Error),
    /// The suite failed while running.
    Runtime(anyhow::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e:#}"),
            RunError::Runtime(e) => write!(f, "run failed: {e:#}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub summary: Summary,
    pub seconds: f64,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.summary.passed
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.summary.checks.iter().find(|c| c.name == name)
    }
}

fn dispatch(cmd: Command, cfg: &RunConfig, art: &mut Artifacts) -> anyhow::Result<suites::SuiteOutput> {
    match cmd {
        Command::Identities => suites::identities(cfg, art),
        Command::CorrectorSweep => suites::corrector_sweep(cfg, art),
        Command::HeatTest => suites::heat_test(cfg, art),
        Command::ItoStrat => suites::ito_strat(cfg, art),
        Command::EulerRun => suites::euler_run(cfg, art),
        Command::InviscidSweep => suites::inviscid_sweep(cfg, art),
    }
}

/// Resolve `cfg` for `cmd`, run the suite and write every artifact.
/// `env_root` is the default output root used when `cfg.out` is unset.
pub fn run(cmd: Command, cfg: &RunConfig, env_root: Option<PathBuf>) -> Result<Outcome, RunError> {
    let mut resolved = cfg.resolve(cmd).map_err(RunError::Config)?;
    let dir = config::output_dir(&resolved, cmd, env_root);
    resolved.out = Some(dir.clone());
    let mut art = Artifacts::create(&dir).map_err(RunError::Runtime)?;
    let mut manifest = Manifest::new(cmd, resolved.clone());
    art.json(MANIFEST_FILE, &manifest).map_err(RunError::Runtime)?;

    let start = Instant::now();
    let out = match dispatch(cmd, &resolved, &mut art) {
        Ok(o) => o,
        Err(e) => {
            let record = FailureRecord { command: cmd, error: Some(format!("{e:#}")), failed_checks: Vec::new() };
            // the run error is what matters; a second failure here adds nothing
            let _ = art.json(FAILURES_FILE, &record);
            return Err(RunError::Runtime(e));
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let passed = out.checks.iter().all(|c| c.passed);
    let summary = Summary { command: cmd, passed, checks: out.checks, results: out.results };
    let mut write = |art: &mut Artifacts| -> anyhow::Result<()> {
        art.json(SUMMARY_FILE, &summary)?;
        let failures = FailureRecord {
            command: cmd,
            error: None,
            failed_checks: summary.checks.iter().filter(|c| !c.passed).cloned().collect(),
        };
        let stale = art.path(FAILURES_FILE);
        if passed {
            if stale.exists() {
                std::fs::remove_file(stale)?;
            }
        } else {
            art.json(FAILURES_FILE, &failures)?;
        }
        art.json(TIMING_FILE, &serde_json::json!({ "seconds": seconds }))?;
        manifest.artifacts = art.written().iter().filter(|w| *w != MANIFEST_FILE).cloned().collect();
        art.json(MANIFEST_FILE, &manifest)
    };
    write(&mut art).map_err(RunError::Runtime)?;
    Ok(Outcome { dir, summary, seconds })
}

/// Re-run the command recorded in a manifest, writing into `out`.
pub fn replay(manifest_path: &Path, out: PathBuf, jobs: Option<usize>) -> Result<Outcome, RunError> {
    let m = Manifest::read(manifest_path).map_err(RunError::Config)?;
    let mut cfg = m.config;
    cfg.out = Some(out);
    if jobs.is_some() {
        cfg.jobs = jobs;
    }
    run(m.command, &cfg, None)
}

/// Statistics files of a finished run: every artifact except [`NON_STATISTICS`].
pub fn statistics_files(dir: &Path) -> anyhow::Result<Vec<String>> {
    let m = Manifest::read(&dir.join(MANIFEST_FILE))?;
    Ok(m.artifacts.into_iter().filter(|a| !NON_STATISTICS.contains(&a.as_str())).collect())
}
