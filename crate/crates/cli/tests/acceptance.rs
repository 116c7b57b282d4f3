//! Acceptance criteria 1 to 10, one PASS/FAIL line each.
//!
//! Runs every suite at its default configuration, including the full
//! inviscid-limit sweep, so expect it to take tens of minutes on one core.
//! `cargo test -p anisns-cli --test acceptance -- --nocapture` shows the report.
//! Set `ANISNS_REPLAY_SWEEP=1` to also replay the full sweep for criterion 10.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use anisns_cli::config::RunConfig;
use anisns_cli::{run, statistics_files, Command, Outcome};

struct Verdict {
    id: u32,
    passed: bool,
    detail: String,
}

fn run_default(cmd: Command, root: &Path) -> Outcome {
    let cfg = RunConfig { out: Some(root.join(cmd.name())), ..RunConfig::default() };
    run(cmd, &cfg, None).unwrap_or_else(|e| panic!("{cmd}: {e}"))
}

fn checks_pass(o: &Outcome, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in names {
        let c = o.check(n).unwrap_or_else(|| panic!("{}: no check {n}", o.summary.command));
        ok &= c.passed;
        parts.push(format!("{n}={:.4e}{}{:.4e}", c.value, c.relation, c.bound));
    }
    (ok, parts.join(" "))
}

fn timed(o: &Outcome, limit: f64) -> (bool, String) {
    (o.seconds < limit, format!("runtime={:.1}s<{limit}s", o.seconds))
}

fn verdict(id: u32, parts: &[(bool, String)]) -> Verdict {
    Verdict {
        id,
        passed: parts.iter().all(|p| p.0),
        detail: parts.iter().map(|p| p.1.as_str()).collect::<Vec<_>>().join(" "),
    }
}

/// Replay `dir`'s manifest through the binary and compare statistics files byte for byte.
fn replay_matches(dir: &Path, into: PathBuf, jobs: &str) -> (bool, String) {
    let status = Process::new(env!("CARGO_BIN_EXE_anisns"))
        .args(["replay", dir.join("manifest.json").to_str().unwrap(), "--jobs", jobs, "--out"])
        .arg(&into)
        .output()
        .expect("run anisns");
    let files = statistics_files(dir).expect("manifest lists artifacts");
    let mismatched: Vec<&String> =
        files.iter().filter(|f| fs::read(dir.join(f)).ok() != fs::read(into.join(f)).ok()).collect();
    let name = dir.file_name().unwrap().to_string_lossy().to_string();
    let ok = mismatched.is_empty() && !files.is_empty() && status.status.code().is_some();
    (ok, format!("{name}:{}/{} identical", files.len() - mismatched.len(), files.len()))
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();

    let identities = run_default(Command::Identities, root);
    let corrector = run_default(Command::CorrectorSweep, root);
    let heat = run_default(Command::HeatTest, root);
    let ito = run_default(Command::ItoStrat, root);
    let sweep = run_default(Command::InviscidSweep, root);

    let mut v = Vec::new();
    v.push(verdict(1, &[checks_pass(&identities, &["adjoint_order", "non_solenoidal_phi"]), timed(&identities, 60.0)]));
    v.push(verdict(
        2,
        &[
            checks_pass(&identities, &["c_delta_relative_change", "fine_grid_violations", "c_square_max"]),
            timed(&identities, 60.0),
        ],
    ));
    let residuals: Vec<(bool, String)> = [&heat, &ito, &sweep]
        .iter()
        .map(|o| {
            let (ok, d) = checks_pass(o, &["max_div_rel", "max_trace_rel"]);
            (ok, format!("{}: {d}", o.summary.command))
        })
        .collect();
    v.push(verdict(3, &residuals));
    let corrector_checks: Vec<&str> = corrector.summary.checks.iter().map(|c| c.name.as_str()).collect();
    v.push(verdict(4, &[checks_pass(&corrector, &corrector_checks), timed(&corrector, 60.0)]));
    v.push(verdict(5, &[checks_pass(&heat, &["relative_l2_error"]), timed(&heat, 60.0)]));
    v.push(verdict(6, &[checks_pass(&ito, &["gap_order", "ablated_gap_order"]), timed(&ito, 600.0)]));
    v.push(verdict(7, &[checks_pass(&heat, &["budget_max_abs"]), checks_pass(&ito, &["budget_order"])]));
    v.push(verdict(
        8,
        &[
            checks_pass(
                &sweep,
                &[
                    "spearman_sup_err_sq",
                    "spearman_diss_h",
                    "spearman_diss_z",
                    "last_over_first_sup_err_sq",
                    "last_over_first_diss_h",
                    "last_over_first_diss_z",
                ],
            ),
            timed(&sweep, 1800.0),
        ],
    ));
    v.push(verdict(9, &[checks_pass(&sweep, &["spearman_kato_tan"])]));

    let replays = root.join("replays");
    let mut repro = Vec::new();
    for o in [&identities, &corrector, &heat, &ito] {
        repro.push(replay_matches(&o.dir, replays.join(o.summary.command.name()), "1"));
    }
    if std::env::var_os("ANISNS_REPLAY_SWEEP").is_some() {
        repro.push(replay_matches(&sweep.dir, replays.join("inviscid-sweep"), "2"));
    } else {
        let small = root.join("small-sweep");
        let text = "grid = [8, 8, 9]\ndt = 0.005\nhorizon = 0.05\n[inviscid_sweep]\nlevels = 3\nsamples = 2\n\
                    sample_every = 2\nper_path_csv = true\n";
        let mut cfg: RunConfig = anisns_cli::config::from_toml(text).unwrap();
        cfg.out = Some(small.clone());
        cfg.jobs = Some(1);
        run(Command::InviscidSweep, &cfg, None).unwrap();
        repro.push(replay_matches(&small, replays.join("small-sweep"), "2"));
    }
    v.push(verdict(10, &repro));

    println!();
    for x in &v {
        println!("criterion {:>2}: {} {}", x.id, if x.passed { "PASS" } else { "FAIL" }, x.detail);
    }
    let failed: Vec<u32> = v.iter().filter(|x| !x.passed).map(|x| x.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
