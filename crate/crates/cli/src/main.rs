use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(name = "opinionlab", version, about = "Opinion dynamics simulation and shift analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured dynamics and write the snapshot series.
    Simulate(Common),
    /// Generate a synthetic friendship graph with initial opinions.
    Generate(Common),
    /// Run the latent dynamics through the subscription observer.
    Observe(Common),
    /// Compute shift metrics for every consecutive snapshot pair.
    Analyze(Common),
    /// Like `analyze`, plus the figure-data bundle for every pair.
    Report(Common),
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory holding `snapshot_<k>.csv` files and `edges.csv`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Also write the neighborhood-composition table.
    #[arg(long)]
    pub homophily: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Generate(a) => ("generate", a),
        Command::Observe(a) => ("observe", a),
        Command::Analyze(a) => ("analyze", a),
        Command::Report(a) => ("report", a),
    };
    match commands::run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!("error[{}]: {e}", cat.as_str());
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
