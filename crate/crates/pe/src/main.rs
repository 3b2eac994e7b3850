use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pe::{execute, exit, Invocation, Mode};

/// Time-periodic solutions of damped isentropic Euler flow.
#[derive(Debug, Parser)]
#[command(name = "pe", version)]
struct Cli {
    /// What to run.
    #[arg(value_enum)]
    mode: Mode,
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the solvers.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Multiplies both grid sizes.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    grid_scale: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("pe: cannot configure thread pool: {e}");
            return ExitCode::from(exit::INTERNAL as u8);
        }
    }
    let inv = Invocation {
        mode: cli.mode,
        config: cli.config,
        out: cli.out,
        threads: cli.threads.map(|n| n as usize),
        grid_scale: cli.grid_scale as usize,
    };
    let man = execute(&inv);
    match &man.error {
        Some(e) => eprintln!("pe {}: {e}", man.mode),
        None => eprintln!(
            "pe {}: ok ({} checks, {} artifacts)",
            man.mode,
            man.checks.len(),
            man.artifacts.len()
        ),
    }
    ExitCode::from(man.exit_code as u8)
}
