use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use saddle_cli::{run, RunOptions};

#[derive(Parser)]
#[command(name = "saddle", version, about = "Run saddle-point solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweeps (default: one per core).
        #[arg(long)]
        workers: Option<usize>,
        /// Replace the zoo seed of the configured problem.
        #[arg(long)]
        seed_override: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, workers, seed_override } => {
            run(&config, &RunOptions { out, workers, seed_override })
        }
    };
    ExitCode::from(code as u8)
}
