use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use occ_core::contraction::ContractionError;
use occ_core::expr::EvalError;
use occ_core::lyapunov::LyapunovError;
use occ_core::ode::OdeError;
use occ_core::system::ModelError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSIFIED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_USAGE, error: error.into() }
}

pub fn numerical(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_NUMERICAL, error: error.into() }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Failure {
        match e {
            ModelError::Eval(_) => numerical(e),
            _ => usage(e),
        }
    }
}

impl From<OdeError> for Failure {
    fn from(e: OdeError) -> Failure {
        match e {
            OdeError::Eval { .. } => numerical(e),
            _ => usage(e),
        }
    }
}

impl From<ContractionError> for Failure {
    fn from(e: ContractionError) -> Failure {
        match e {
            ContractionError::Ode(OdeError::Eval { .. }) | ContractionError::Eval(_) | ContractionError::Threads(_) => {
                numerical(e)
            }
            _ => usage(e),
        }
    }
}

impl From<LyapunovError> for Failure {
    fn from(e: LyapunovError) -> Failure {
        match e {
            LyapunovError::Eval(_) | LyapunovError::Model(ModelError::Eval(_)) | LyapunovError::Threads(_) => {
                numerical(e)
            }
            _ => usage(e),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Failure {
        numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        numerical(e)
    }
}

/// What a subcommand produced before it is wrapped into a [`RunReport`].
pub struct Outcome {
    pub exit: i32,
    pub result: Value,
    /// file name (relative to `--out`) and contents
    pub files: Vec<(String, String)>,
    /// stdout body for `--format csv`
    pub csv: Option<String>,
}

impl Outcome {
    pub fn new(exit: i32, result: Value) -> Outcome {
        Outcome { exit, result, files: Vec::new(), csv: None }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub exit_code: i32,
    pub result: Value,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn new(command: Vec<String>, seed: Option<u64>, wall_time_s: f64, outcome: &Outcome) -> RunReport {
        RunReport {
            tool: "occtl",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            wall_time_s,
            exit_code: outcome.exit,
            result: outcome.result.clone(),
            files: outcome.files.iter().map(|(name, _)| name.clone()).collect(),
        }
    }
}

/// Writes every file of the outcome plus `report.json` into `dir`.
pub fn write_out(dir: &Path, outcome: &Outcome, report: &RunReport) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = Vec::new();
    for (name, body) in &outcome.files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(report)? + "\n")?;
    written.push(path);
    Ok(written)
}
