//! `polyvar`: periodic eigenvalue solvers, Monte-Carlo estimators, and
//! closed-form oracles behind a config-file CLI that emits CSV.
//!
//! Exit codes are part of the contract: 0 success, 2 model error (e.g. a
//! non-irreducible quotient), 3 configuration error, 4 resource cap.

mod config;
mod csvout;
mod duality_cmd;
mod mc_cmd;
mod oracle_cmd;
mod periodic_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "polyvar", version, about = "Directed polymer / percolation constants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Periodic environments: Perron-Frobenius and max-plus eigenproblems,
    /// correctors, circuits, Busemann traces, point-to-point constants.
    Periodic(RunArgs),
    /// Monte-Carlo estimators on i.i.d. planar fields.
    Mc(RunArgs),
    /// Closed-form oracle curves (Rost shape, log-gamma).
    Oracle(RunArgs),
    /// Grid Legendre transforms between tilts and velocities.
    Duality(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed given in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replica-parallel estimators; defaults to
    /// POLYVAR_THREADS, then to the machine's parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

/// Command failure with its contractual exit code.
pub enum Failure {
    Config(String),
    Model(String),
    Cap(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 3,
            Failure::Model(_) => 2,
            Failure::Cap(_) => 4,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Model(m) | Failure::Cap(m) | Failure::Io(m) => m,
        }
    }
}

impl From<polyvar::Error> for Failure {
    fn from(e: polyvar::Error) -> Self {
        match e {
            polyvar::Error::CapExceeded { .. } => Failure::Cap(e.to_string()),
            polyvar::Error::InvalidInput(_) => Failure::Config(e.to_string()),
            _ => Failure::Model(e.to_string()),
        }
    }
}

fn resolve_threads(args: &RunArgs) -> usize {
    args.threads
        .or_else(|| {
            std::env::var("POLYVAR_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1)
}

fn read_config(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))
}

fn emit(args: &RunArgs, csv: String) -> Result<(), Failure> {
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Periodic(args) => {
            let text = read_config(&args.config)?;
            let csv = periodic_cmd::run(&text)?;
            emit(&args, csv)
        }
        Command::Mc(args) => {
            let text = read_config(&args.config)?;
            let threads = resolve_threads(&args);
            let csv = mc_cmd::run(&text, args.seed, threads)?;
            emit(&args, csv)
        }
        Command::Oracle(args) => {
            let text = read_config(&args.config)?;
            let csv = oracle_cmd::run(&text)?;
            emit(&args, csv)
        }
        Command::Duality(args) => {
            let text = read_config(&args.config)?;
            let csv = duality_cmd::run(&text)?;
            emit(&args, csv)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
