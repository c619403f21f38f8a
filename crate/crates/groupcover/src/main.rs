//! Thin CLI over the harness: `run`, `sweep` and `plotdata`.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for runtime
//! failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use groupcover::harness;

#[derive(Parser)]
#[command(
    name = "groupcover",
    version,
    about = "Group-identity proxy privacy simulator"
)]
struct Cli {
    /// Override the scenario seed (also: GROUPCOVER_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (also: GROUPCOVER_OUT; default: ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Parallel workers for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config and write metrics.csv.
    Run { config: PathBuf },
    /// Expand a sweep spec and run every cell.
    Sweep { spec: PathBuf },
    /// Export long-format plot data from a metrics directory.
    Plotdata { dir: PathBuf, figure: String },
}

fn execute(cli: Cli) -> groupcover::Result<()> {
    let seed = harness::effective_seed(cli.seed)?;
    let out = harness::effective_out(cli.out);
    match cli.command {
        Command::Run { config } => {
            let output = harness::run(&config, seed, &out)?;
            println!("wrote {}", output.csv_path.display());
            print!("{}", output.summary);
        }
        Command::Sweep { spec } => {
            let output = harness::sweep(&spec, seed, &out, cli.workers)?;
            println!("wrote {}", output.aggregate_path.display());
            print!("{}", output.summary);
        }
        Command::Plotdata { dir, figure } => {
            let path = harness::emit_plotdata(&dir, &figure, Some(&out))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
