use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::RunError;
use crate::output::write_bytes;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub pe: &'static str,
    pub pe_core: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            pe: env!("CARGO_PKG_VERSION"),
            pe_core: pe_core::VERSION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one run: the echoed configuration, timings, checks and artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub mode: String,
    pub versions: Versions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    pub grid_scale: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub timings: Vec<Timing>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    out_dir: PathBuf,
}

impl RunManifest {
    pub fn new(mode: &str, out_dir: &Path, grid_scale: usize, threads: Option<usize>) -> Self {
        Self {
            mode: mode.to_string(),
            versions: Versions::default(),
            config: None,
            grid_scale,
            threads,
            timings: Vec::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            artifacts: Vec::new(),
            status: "running".into(),
            exit_code: 0,
            error: None,
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Runs `f`, recording its wall-clock time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(Timing {
            phase: phase.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Path for a new artifact in the output directory.
    pub fn artifact_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Registers an already written artifact with its digest.
    pub fn register(&mut self, name: &str) -> Result<(), RunError> {
        let bytes = fs::read(self.artifact_path(name))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn finish(&mut self, result: &Result<(), RunError>) {
        match result {
            Ok(()) => {
                self.status = "ok".into();
                self.exit_code = 0;
                self.error = None;
            }
            Err(e) => {
                self.status = match e {
                    RunError::Check(_) => "check_failed",
                    RunError::Config(_) | RunError::Validation(_) => "invalid",
                    RunError::Solver(_) => "solver_failed",
                    _ => "error",
                }
                .into();
                self.exit_code = e.exit_code();
                self.error = Some(e.to_string());
            }
        }
    }

    /// Writes `manifest.json` into the output directory.
    pub fn write(&self) -> Result<PathBuf, RunError> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).map_err(|e| RunError::Internal(e.to_string()))?;
        text.push('\n');
        write_bytes(&path, text.as_bytes())?;
        Ok(path)
    }
}
