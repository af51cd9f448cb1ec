use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manifold_fpe::cli::{error_exit_code, run, RunOptions};
use manifold_fpe::config::ExperimentKind;

#[derive(Parser)]
#[command(
    name = "mfpe",
    version,
    about = "Fokker-Planck experiments on the sphere and the flat torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identity suite across a refinement ladder
    Check(RunArgs),
    /// Evolve a density with the Fokker-Planck solver
    Fpe(RunArgs),
    /// Simulate a particle ensemble
    Mc(RunArgs),
    /// Compare Monte Carlo and PDE densities
    Compare(RunArgs),
    /// Grid Bayes filter with a particle filter oracle
    Filter(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Check(a) => (ExperimentKind::Check, a),
        Command::Fpe(a) => (ExperimentKind::Fpe, a),
        Command::Mc(a) => (ExperimentKind::Mc, a),
        Command::Compare(a) => (ExperimentKind::Compare, a),
        Command::Filter(a) => (ExperimentKind::Filter, a),
    };
    let opts = RunOptions {
        config: args.config,
        out: args.out,
        seed: args.seed,
    };
    let code = match run(kind, &opts) {
        Ok(report) => {
            for l in &report.lines {
                println!("{l}");
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("mfpe {}: {e}", kind.name());
            error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
