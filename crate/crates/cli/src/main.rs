//! relicforge: camera-action extraction, data curation, streaming-cache
//! budgeting, distillation demos and trajectory evaluation from one binary.

mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use error::CliError;

const EX_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "relicforge",
    version,
    about = "Toolkit for camera-action data, compressed-cache budgets and trajectory metrics"
)]
struct Cli {
    /// Seed for every random choice the subcommands make.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Label per-frame camera actions from trajectory documents.
    ExtractActions(commands::extract::Args),
    /// Rebuild a trajectory from an actions document.
    Integrate(commands::integrate::Args),
    /// Sample a palindromic time-reversal frame order.
    Augment(commands::augment::Args),
    /// Aggregate clip statistics into histogram tables.
    Stats(commands::stats::Args),
    /// Select a clip subset approaching a target action mix.
    Balance(commands::balance::Args),
    /// Step the compressed KV cache and report token/byte/FLOP budgets.
    SimulateCache(commands::simulate::Args),
    /// Render block-causal and hybrid-forcing attention masks.
    Masks(commands::masks::Args),
    /// Run the replayed-distillation convergence demo.
    DistillDemo(commands::distill::Args),
    /// Compare two trajectories: relative pose error and alignment fit.
    EvalRpe(commands::evalrpe::Args),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ExtractActions(args) => commands::extract::run(args),
        Command::Integrate(args) => commands::integrate::run(args),
        Command::Augment(args) => commands::augment::run(args, cli.seed),
        Command::Stats(args) => commands::stats::run(args),
        Command::Balance(args) => commands::balance::run(args, cli.seed),
        Command::SimulateCache(args) => commands::simulate::run(args),
        Command::Masks(args) => commands::masks::run(args),
        Command::DistillDemo(args) => commands::distill::run(args, cli.seed),
        Command::EvalRpe(args) => commands::evalrpe::run(args),
    }
}

/// RELICFORGE_THREADS caps the rayon pool; unset means rayon's default.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RELICFORGE_THREADS") else {
        return Ok(());
    };
    let threads = raw.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Validation(format!("RELICFORGE_THREADS must be a positive integer, got {raw:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if informational { ExitCode::SUCCESS } else { ExitCode::from(EX_USAGE) };
        }
    };
    match configure_threads().and_then(|()| dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Validation(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Io(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
