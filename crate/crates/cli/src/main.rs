//! Batch front-end for the cavity-tempo engine. One TOML config file
//! describes the system, bath, engine, and job; subcommands select the
//! pipeline. Outputs are plot-ready CSVs plus a JSON manifest per job
//! directory. The whole pipeline is deterministic: identical config and
//! mode file give bitwise-identical outputs at any worker count.

mod config;
mod error;
mod jobs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::parse_config;
use crate::jobs::JobContext;

#[derive(Parser)]
#[command(
    name = "cavity-tempo",
    version,
    about = "Dynamics and absorption spectra of a phonon-dressed emitter in a lossy cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Job configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory; overrides job.out_dir from the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweep entries (default: available parallelism).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Assert the determinism contract: the pipeline contains no RNG, so
    /// there is no seed to set. The flag is accepted and is a no-op.
    #[arg(long)]
    seedless: bool,

    /// Interpret mode-file energies as meV instead of eV.
    #[arg(long)]
    modes_mev: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the excited emitter and write the trajectory CSV.
    Dynamics(CommonArgs),
    /// Compute the linear response and write the absorption spectrum.
    Spectrum(CommonArgs),
    /// Tabulate the bath correlation function C(t).
    Corr(CommonArgs),
    /// Tabulate the discretized memory kernel eta_Delta.
    Kernel(CommonArgs),
    /// Fan out spectrum runs over the alpha list and (g, kappa) grid.
    Sweep(CommonArgs),
    /// Parse and validate the config, then exit.
    Validate(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> error::Result<()> {
    let (name, args) = match &cli.command {
        Command::Dynamics(a) => ("dynamics", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Corr(a) => ("corr", a),
        Command::Kernel(a) => ("kernel", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Validate(a) => ("validate", a),
    };
    let mut cfg = parse_config(&args.config)?;
    cfg.bath.modes_in_mev = args.modes_mev;
    if name == "validate" {
        return jobs::run_validate(&cfg);
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.job.out_dir.clone())
        .ok_or_else(|| {
            error::CliError::Config(
                "no output directory: set job.out_dir in the config or pass --out".into(),
            )
        })?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(error::CliError::Config("--workers must be at least 1".into()));
    }
    let ctx = JobContext {
        cfg,
        out_dir,
        workers,
    };
    match name {
        "dynamics" => jobs::run_dynamics(&ctx),
        "spectrum" => jobs::run_spectrum(&ctx),
        "corr" => jobs::run_corr(&ctx),
        "kernel" => jobs::run_kernel(&ctx),
        "sweep" => jobs::run_sweep(&ctx),
        _ => unreachable!("subcommand list is exhaustive"),
    }
}
