use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{Command, RunConfig};

/// One asserted inequality of a suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: String,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check { name: name.into(), value, relation: "<=".into(), bound, passed: value <= bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check { name: name.into(), value, relation: ">=".into(), bound, passed: value >= bound }
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check { name: name.into(), value, relation: "<".into(), bound, passed: value < bound }
    }
}

/// `summary.json`: the checks plus command-specific statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: Command,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
}

/// `failures.json`, written when a check fails or the run errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub command: Command,
    pub error: Option<String>,
    pub failed_checks: Vec<Check>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FAILURES_FILE: &str = "failures.json";
pub const TIMING_FILE: &str = "timing.json";
pub const MANIFEST_FORMAT: u32 = 1;

/// `manifest.json`: enough to re-run the command with identical statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub command: Command,
    pub version: String,
    pub config: RunConfig,
    pub stream_derivation: String,
    pub diagnostics_columns: Vec<String>,
    pub abort_records: String,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn new(command: Command, config: RunConfig) -> Manifest {
        Manifest {
            format: MANIFEST_FORMAT,
            command,
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            stream_derivation: "ChaCha8 seeded with the base seed; stream = (purpose << 56) | (k << 32) | sample with \
                purpose 1 = sweep, 2 = ito-strat, 3 = energy budget; step n reads the Box-Muller normals at \
                word offset n * 4 * ceil(modes / 2)"
                .into(),
            diagnostics_columns: crate::suites::DIAG_COLUMNS.iter().map(|s| s.to_string()).collect(),
            abort_records: "paths.csv column 'aborted' holds the abort reason of a path; a level with more than \
                half its paths aborted is marked 'dropped' in sweep.csv and left out of the trends"
                .into(),
            artifacts: Vec::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Output directory that remembers what was written to it.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Artifacts> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn note(&mut self, name: &str) {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.note(name);
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text).with_context(|| format!("writing {name}"))?;
        self.note(name);
        Ok(())
    }
}
