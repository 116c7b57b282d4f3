use std::path::PathBuf;
use std::process::ExitCode;

use anisns_cli::config::{parse_config, parse_grid, OUT_ENV};
use anisns_cli::{replay, run, Command, Outcome, Overrides, RunError};
use clap::{Parser, Subcommand};

/// Anisotropic stochastic Navier-Stokes between two plates: operator checks,
/// boundary-layer corrector, scheme comparisons and the inviscid-limit sweep.
///
/// Exit status: 0 if every check passed, 1 if a check failed, 2 for a
/// rejected configuration, 3 if the run itself failed.
#[derive(Parser, Debug)]
#[command(name = "anisns", version)]
struct Cli {
    /// TOML run configuration; unknown keys are errors
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $ANISNS_OUT/<command> or anisns-out/<command>]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum number of worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_name = "NX,NY,NZ", value_parser = parse_grid)]
    grid: Option<[usize; 3]>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Adjoint residual table and cancellation estimates on random fields
    Identities,
    /// Corrector norm scalings and Hardy ratios
    CorrectorSweep,
    /// Zero-noise viscous decay against the closed form
    HeatTest,
    /// Itô scheme versus the Stratonovich-Heun oracle, and the noisy energy ledger
    ItoStrat,
    /// Reference Euler trajectory with trace bounds
    EulerRun,
    /// Inviscid-limit sweep over the viscosity sequence
    InviscidSweep,
    /// Re-run the command recorded in a manifest
    Replay { manifest: PathBuf },
    /// Print the fully resolved configuration of a command as TOML
    ShowConfig { command: String },
}

fn report(o: &Outcome) -> ExitCode {
    for c in &o.summary.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<36} {:.6e} {} {:.6e}", c.name, c.value, c.relation, c.bound);
    }
    let verdict = if o.passed() { "passed" } else { "FAILED" };
    println!("{} {verdict} in {:.1}s; artifacts in {}", o.summary.command, o.seconds, o.dir.display());
    if o.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("anisns: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        jobs: cli.jobs,
        grid: cli.grid,
        dt: cli.dt,
        horizon: cli.horizon,
    };
    let cmd = match &cli.cmd {
        Cmd::Identities => Command::Identities,
        Cmd::CorrectorSweep => Command::CorrectorSweep,
        Cmd::HeatTest => Command::HeatTest,
        Cmd::ItoStrat => Command::ItoStrat,
        Cmd::EulerRun => Command::EulerRun,
        Cmd::InviscidSweep => Command::InviscidSweep,
        Cmd::Replay { manifest } => {
            if cli.config.is_some()
                || flags.seed.is_some()
                || flags.grid.is_some()
                || flags.dt.is_some()
                || flags.horizon.is_some()
            {
                return fail(RunError::Config(anyhow::anyhow!("replay accepts only --out and --jobs")));
            }
            let out = cli.out.unwrap_or_else(|| manifest.parent().unwrap_or(".".as_ref()).join("replay"));
            return match replay(manifest, out, cli.jobs) {
                Ok(o) => report(&o),
                Err(e) => fail(e),
            };
        }
        Cmd::ShowConfig { command } => {
            let Some(cmd) = Command::ALL.into_iter().find(|c| c.name() == command) else {
                return fail(RunError::Config(anyhow::anyhow!("unknown command '{command}'")));
            };
            let shown =
                parse_config(cli.config.as_deref(), &flags).and_then(|c| c.resolve(cmd)).and_then(|c| c.to_toml());
            return match shown {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(RunError::Config(e)),
            };
        }
    };
    let cfg = match parse_config(cli.config.as_deref(), &flags) {
        Ok(c) => c,
        Err(e) => return fail(RunError::Config(e)),
    };
    match run(cmd, &cfg, std::env::var_os(OUT_ENV).map(PathBuf::from)) {
        Ok(o) => report(&o),
        Err(e) => fail(e),
    }
}
