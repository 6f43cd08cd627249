use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use expfam_cli::{execute, Command, Format, RunConfig};

/// Exact and numerical tools for discrete exponential families.
#[derive(Parser, Debug)]
#[command(name = "expfam", version)]
struct Args {
    command: Command,
    /// Family JSON (canonical, partition or hierarchical form).
    #[arg(long)]
    family: Option<PathBuf>,
    /// Distribution JSON, an array or {"p": [...]}.
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = expfam::divmax::DEFAULT_STARTS)]
    starts: usize,
    /// Cross-check the maximum against the exhaustive oracle.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 0.05)]
    grid_step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

fn main() -> ExitCode {
    // Argument errors share the generic error code; 2 is reserved for violations.
    let a = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { expfam_cli::EXIT_ERROR as u8 } else { 0 });
        }
    };
    let config = RunConfig {
        command: a.command,
        family: a.family,
        dist: a.dist,
        seed: a.seed,
        tol: a.tol,
        starts: a.starts,
        oracle: a.oracle,
        grid_step: a.grid_step,
        out: a.out,
        format: a.format,
        n: a.n,
        k: a.k,
        samples: a.samples,
    };
    ExitCode::from(execute(&config) as u8)
}
