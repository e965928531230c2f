use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use covariant_povm_cli::{run_file, RunOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Md,
}

/// Analyze covariant POVM seeds described in a scenario file.
#[derive(Debug, Parser)]
#[command(name = "covpovm", version)]
struct Args {
    /// Scenario file (JSON).
    file: PathBuf,
    /// Rank and containment tolerance.
    #[arg(long, default_value_t = covariant_povm::numerics::DEFAULT_TOL)]
    tol: f64,
    /// Seed for randomized decompositions; decimal or 0x-prefixed hex.
    #[arg(long, value_parser = parse_u64, default_value = "0xC0FFEE")]
    rng_seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optimizer iteration cap.
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

fn parse_u64(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("{s:?} is not a u64: {e}"))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let opts = RunOptions {
        tol: args.tol,
        rng_seed: args.rng_seed,
        max_iter: args.max_iter,
    };
    let output = match run_file(&args.file, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = match args.format {
        Format::Json => output.report.to_json(),
        Format::Md => output.report.to_markdown(),
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    match output.error {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        None => ExitCode::SUCCESS,
    }
}
