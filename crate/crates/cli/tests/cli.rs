use std::fs;
use std::path::Path;
use std::process::{Command as Process, Output};

use anisns_cli::artifacts::{Manifest, Summary};
use anisns_cli::config::{from_toml, RunConfig};
use anisns_cli::{run, statistics_files, Command};

fn anisns(args: &[&str], dir: &Path) -> Output {
    Process::new(env!("CARGO_BIN_EXE_anisns"))
        .args(args)
        .current_dir(dir)
        .env_remove("ANISNS_OUT")
        .output()
        .expect("run anisns")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "seed = 1\nbogus = 3\n").unwrap();
    let o = anisns(&["heat-test", "--config", "bad.toml"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn hypothesis_violation_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[inviscid_sweep]\nsequence = \"custom\"\n\
                custom = [{ k = 1, nu_h = 0.1, nu_z = 0.01 }, { k = 2, nu_h = 0.01, nu_z = 0.01 }]\n";
    fs::write(tmp.path().join("seq.toml"), text).unwrap();
    let o = anisns(&["inviscid-sweep", "--config", "seq.toml"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("inviscid-limit hypothesis"));
}

#[test]
fn replay_rejects_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let o = anisns(&["replay", "manifest.json", "--seed", "4"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn show_config_prints_resolved_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let o = anisns(&["show-config", "heat-test", "--dt", "0.002"], tmp.path());
    assert_eq!(code(&o), 0);
    let cfg: RunConfig = from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg.dt, Some(0.002));
    assert_eq!(cfg.grid, Some([8, 8, 64]));
}

#[test]
fn flags_override_file_and_land_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), "seed = 5\ngrid = [4, 4, 16]\nhorizon = 0.01\ndt = 0.001\n").unwrap();
    let o = anisns(&["heat-test", "--config", "run.toml", "--seed", "9", "--out", "h"], tmp.path());
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let m = Manifest::read(&tmp.path().join("h/manifest.json")).unwrap();
    assert_eq!(m.config.seed, 9);
    assert_eq!(m.config.grid, Some([4, 4, 16]));
    assert!(m.artifacts.iter().any(|a| a == "summary.json"));
    assert!(m.artifacts.iter().any(|a| a == "diagnostics.csv"));
}

#[test]
fn default_output_root_is_per_command() {
    let tmp = tempfile::tempdir().unwrap();
    let o = anisns(&["corrector-sweep"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let dir = tmp.path().join("anisns-out/corrector-sweep");
    let s: Summary = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    assert!(s.passed);
    assert!(!dir.join("failures.json").exists());
}

#[test]
fn failed_check_exits_1_with_failure_record() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "grid = [4, 4, 16]\ndt = 0.001\nhorizon = 0.01\n[heat_test]\nrel_tolerance = 1e-30\n";
    fs::write(tmp.path().join("strict.toml"), text).unwrap();
    let o = anisns(&["heat-test", "--config", "strict.toml", "--out", "s"], tmp.path());
    assert_eq!(code(&o), 1);
    let failures = fs::read_to_string(tmp.path().join("s/failures.json")).unwrap();
    assert!(failures.contains("relative_l2_error"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL relative_l2_error"));
}

#[test]
fn small_sweep_replays_identically_across_job_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "grid = [8, 8, 9]\ndt = 0.005\nhorizon = 0.03\njobs = 1\n\
                [inviscid_sweep]\nlevels = 2\nsamples = 2\nsample_every = 2\nper_path_csv = true\n";
    let mut cfg = from_toml(text).unwrap();
    cfg.out = Some(tmp.path().join("a"));
    let first = run(Command::InviscidSweep, &cfg, None).unwrap();
    let o = anisns(&["replay", "a/manifest.json", "--jobs", "2", "--out", "b"], tmp.path());
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let files = statistics_files(&first.dir).unwrap();
    assert!(files.iter().any(|f| f.starts_with("paths/")));
    for f in files {
        assert_eq!(
            fs::read(tmp.path().join("a").join(&f)).unwrap(),
            fs::read(tmp.path().join("b").join(&f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn sweep_reuses_saved_euler_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "grid = [8, 8, 9]\ndt = 0.005\nhorizon = 0.03\n";
    let mut euler = from_toml(&format!("{base}[euler_run]\nsample_every = 1\n")).unwrap();
    euler.out = Some(tmp.path().join("euler"));
    run(Command::EulerRun, &euler, None).unwrap();

    let traj = tmp.path().join("euler/trajectory");
    let sweep_text = format!(
        "{base}[inviscid_sweep]\nlevels = 2\nsamples = 1\nsample_every = 1\ntrajectory = {:?}\n",
        traj.to_str().unwrap()
    );
    let mut with = from_toml(&sweep_text).unwrap();
    with.out = Some(tmp.path().join("with"));
    let mut without =
        from_toml(&format!("{base}[inviscid_sweep]\nlevels = 2\nsamples = 1\nsample_every = 1\n")).unwrap();
    without.out = Some(tmp.path().join("without"));
    run(Command::InviscidSweep, &with, None).unwrap();
    run(Command::InviscidSweep, &without, None).unwrap();
    assert_eq!(
        fs::read(tmp.path().join("with/sweep.csv")).unwrap(),
        fs::read(tmp.path().join("without/sweep.csv")).unwrap()
    );
}
