use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use irrigen::run::{run_file, RunOptions};
use irrigen::Execution;

/// Entropy generation and exergy analysis driven by a plain-text config.
#[derive(Debug, Parser)]
#[command(name = "irrigen", version)]
struct Cli {
    /// Configuration file.
    config: PathBuf,
    /// Output directory, overriding the config's `output` entry.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding the config's `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Run every reduction on one thread, in a fixed order.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("IRRIGEN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    let options = RunOptions {
        out_dir: cli.out,
        seed_override: cli.seed,
        execution: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    match run_file(&cli.config, &options) {
        Ok(outcome) => {
            print!("{}", outcome.report.to_csv());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("irrigen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
