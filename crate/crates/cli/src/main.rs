mod commands;
mod config;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Experiment, FileConfig, Flags, RunConfig};

const PROVENANCE: &str = concat!("bdlab-cli ", env!("CARGO_PKG_VERSION"));

/// Simulation and scaling-limit experiments for heavy-tailed ballistic
/// deposition.
///
/// Thread count: set BDLAB_THREADS (defaults to all cores).
#[derive(Debug, Parser)]
#[command(name = "bdlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Forward simulation on a torus or window: blocklog.csv, interface.csv
    Forward(Flags),
    /// Replicated h(0,T) by the backward representation: heights.csv
    Height(Flags),
    /// KS distance of h(0,T)/a_{pT^2} to H_k: convergence.csv, heights.csv, hk.csv
    Convergence(Flags),
    /// Log-median slopes under p = T^-zeta: phase_sweep.csv, slopes.csv
    PhaseSweep(Flags),
    /// Bernoulli-mark heights over sigma x T cells: bbd.csv
    Bbd(Flags),
    /// Cone statistics against their closed forms: moments.csv
    Moments(Flags),
    /// Top-k atoms of the continuous model and H_k draws: samples.csv, hk.csv
    ContinuousSample(Flags),
    /// Random-deposition stable-limit self-consistency: rd_check.csv
    RdCheck(Flags),
    /// Runs the experiment named in the --config file
    Run(Flags),
}

fn resolve(command: Command) -> Result<RunConfig, config::ConfigError> {
    let (experiment, flags) = match command {
        Command::Forward(f) => (Some(Experiment::Forward), f),
        Command::Height(f) => (Some(Experiment::Height), f),
        Command::Convergence(f) => (Some(Experiment::Convergence), f),
        Command::PhaseSweep(f) => (Some(Experiment::PhaseSweep), f),
        Command::Bbd(f) => (Some(Experiment::Bbd), f),
        Command::Moments(f) => (Some(Experiment::Moments), f),
        Command::ContinuousSample(f) => (Some(Experiment::ContinuousSample), f),
        Command::RdCheck(f) => (Some(Experiment::RdCheck), f),
        Command::Run(f) => (None, f),
    };
    let file = match &flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    RunConfig::resolve(experiment, file, flags)
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("BDLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| format!("BDLAB_THREADS = {value:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("thread pool: {e}"))
}

fn write_summary(cfg: &RunConfig, results: serde_json::Value) -> Result<(), commands::RunError> {
    let summary = json!({
        "provenance": PROVENANCE,
        "seed": cfg.seed,
        "config": cfg,
        "results": results,
    });
    let text = serde_json::to_string_pretty(&summary).expect("plain data");
    commands::write_file(&cfg.out, "summary.json", |w| {
        use std::io::Write;
        writeln!(w, "{text}")
    })
}

fn create_dir(path: &Path) -> Result<(), String> {
    std::fs::create_dir_all(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.seed_defaulted {
        eprintln!("warning: no seed given, using the default seed 0");
    }
    if let Err(e) = configure_threads().and_then(|()| create_dir(&cfg.out)) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let outcome = commands::run(&cfg).and_then(|report| {
        write_summary(&cfg, report.results)?;
        Ok(report.line)
    });
    match outcome {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
