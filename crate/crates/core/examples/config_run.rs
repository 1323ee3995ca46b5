//! Parses a configuration and runs it, as the `irrigen` binary does.
//!
//! Run with `cargo run --release --example config_run -- examples/configs/verify.cfg`.

use std::path::PathBuf;

use irrigen::run::{run_file, RunOptions};
use irrigen::Execution;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/exergy.cfg")
        });
    let out = std::env::temp_dir().join("irrigen-example");
    let options = RunOptions {
        out_dir: Some(out.clone()),
        seed_override: None,
        execution: Execution::Sequential,
    };
    match run_file(&path, &options) {
        Ok(outcome) => {
            print!("{}", outcome.report.to_csv());
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            std::process::exit(outcome.exit_code);
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            std::process::exit(e.exit_code());
        }
    }
}
