//! Experiment driver for time-periodic damped Euler flow: strict JSON
//! configuration, mode dispatch over the solvers in `pe_core`, CSV output
//! and a run manifest with content digests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod runner;

use std::path::PathBuf;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Mode};
pub use error::{exit, RunError};
pub use manifest::RunManifest;

/// Command-line options after parsing.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub mode: Mode,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub grid_scale: usize,
}

/// Parses the configuration, runs the mode and writes the manifest.
/// Returns the manifest; its `exit_code` is the process exit code.
pub fn execute(inv: &Invocation) -> RunManifest {
    let parsed = parse_config(&inv.config);
    let out_dir = match (&inv.out, &parsed) {
        (Some(dir), _) => dir.clone(),
        (None, Ok(cfg)) => PathBuf::from(&cfg.output.directory),
        (None, Err(_)) => PathBuf::from(config::OutputConfig::default().directory),
    };
    let mut man = RunManifest::new(&inv.mode.to_string(), &out_dir, inv.grid_scale, inv.threads);
    let result = parsed.and_then(|cfg| runner::run(inv.mode, &cfg, inv.grid_scale, &mut man));
    man.finish(&result);
    if let Err(e) = man.write() {
        man.finish(&Err(e));
    }
    man
}
