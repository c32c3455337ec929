use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dfs_lab_cli::config::{Experiment, Overrides};

#[derive(Parser)]
#[command(name = "dfs-lab", version, about = "Run DFS and dynamical-decoupling experiments from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity versus logical polar angle.
    ThetaScan(Common),
    /// DFS3 fidelity over logical states and gauge choices.
    GaugeScan(Common),
    /// Fidelity decay versus repetitions, with fits and time averages.
    Decay(Common),
    /// Many-block logical arm against a matched physical arm.
    Scaling(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `output` from the config, else `results`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use exact outcome probabilities instead of sampled shots.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    shots: Option<NonZeroUsize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, c) = match cli.command {
        Command::ThetaScan(c) => (Experiment::ThetaScan, c),
        Command::GaugeScan(c) => (Experiment::GaugeScan, c),
        Command::Decay(c) => (Experiment::Decay, c),
        Command::Scaling(c) => (Experiment::Scaling, c),
    };
    let overrides = Overrides { out: c.out, seed: c.seed, exact: c.exact, shots: c.shots };
    match dfs_lab_cli::run(experiment, &c.config, &overrides) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dfs-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
