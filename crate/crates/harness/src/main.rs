use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plasmotrack_harness::experiments::{run_calibrate, run_coercivity, run_place, run_restriction, run_simulate, run_sweep};
use plasmotrack_harness::track::run_track;
use plasmotrack_harness::{ExperimentConfig, HarnessError, Report};

#[derive(Parser)]
#[command(name = "plasmotrack", version, about = "Point-actuator heat tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// closed-loop decay from a nonzero initial state
    Simulate(Flags),
    /// actuator points, conditioning and contraction diagnostics
    Place(Flags),
    /// build K0 and its SVD summary
    Calibrate(Flags),
    /// the full tracking loop with error budget
    Track(Flags),
    /// bounded-domain vs free-space gap sweep
    Restriction(Flags),
    /// nullspace coercivity over node meshes
    Coercivity(Flags),
    /// delta, gain and mesh sweeps
    Sweep(Flags),
}

#[derive(Args)]
struct Flags {
    /// config file, or `default` for the built-in scenario
    #[arg(long, default_value = "default")]
    config: String,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// run assertions only, write nothing
    #[arg(long)]
    check: bool,
}

fn execute(command: &str, cfg: &ExperimentConfig, report: &mut Report) -> plasmotrack_harness::Result<()> {
    match command {
        "simulate" => run_simulate(cfg, report),
        "place" => run_place(cfg, report),
        "calibrate" => run_calibrate(cfg, report),
        "track" => run_track(cfg, report).map(|_| ()),
        "restriction" => run_restriction(cfg, report).map(|_| ()),
        "coercivity" => run_coercivity(cfg, report).map(|_| ()),
        _ => run_sweep(cfg, report),
    }
}

fn fail(e: &HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let (name, flags) = match Cli::parse().command {
        Command::Simulate(f) => ("simulate", f),
        Command::Place(f) => ("place", f),
        Command::Calibrate(f) => ("calibrate", f),
        Command::Track(f) => ("track", f),
        Command::Restriction(f) => ("restriction", f),
        Command::Coercivity(f) => ("coercivity", f),
        Command::Sweep(f) => ("sweep", f),
    };
    let mut cfg = match ExperimentConfig::load(&flags.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if flags.seed.is_some() {
        cfg.seed = flags.seed;
    }
    if let Err(e) = cfg.seed() {
        return fail(&e);
    }
    let mut report = Report::new(name, &cfg.canonical(), cfg.seed);
    let mut code = 0;
    match execute(name, &cfg, &mut report) {
        Err(e @ HarnessError::Config(_)) => return fail(&e),
        Err(e) => {
            eprintln!("error: {e}");
            report.failure = Some(e.to_string());
            code = e.exit_code();
        }
        Ok(()) => {}
    }
    for line in report.assertion_lines() {
        println!("{line}");
    }
    if !report.all_passed() {
        code = code.max(1);
    }
    if !flags.check {
        match report.write(&flags.out) {
            Ok(paths) => println!("wrote {} files to {}", paths.len(), flags.out.display()),
            Err(e) => {
                eprintln!("error: {e}");
                code = code.max(1);
            }
        }
    }
    ExitCode::from(code)
}
