//! Run manifests: the full parameter set of a finished run, its inputs
//! pinned by content hash, and the artifacts it wrote. `opfx replay`
//! reruns a manifest and must reproduce every artifact byte for byte.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use opfx::nlp_solver::SolverOpts;
use opfx::persist::{atomic_write, sha256_hex};
use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Failure};

/// A data file a run consumed, pinned by content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollectSpec {
    pub case: String,
    pub objective: String,
    pub n: usize,
    pub seed: u64,
    pub perturbation: f64,
    pub dnf_policy: String,
    pub solver: SolverOpts<f64>,
    pub out_dir: String,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustSpec {
    pub case: String,
    pub m: usize,
    pub t: usize,
    pub seed: u64,
    pub cap: usize,
    pub perturbation: f64,
    pub solver: SolverOpts<f64>,
    pub out_dir: String,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareSpec {
    pub case: String,
    pub set: String,
    pub libraries: Vec<String>,
    pub norms: Vec<String>,
    pub scope: String,
    pub out_dir: String,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreSpec {
    pub tables: Vec<String>,
    pub out_dir: String,
    pub label: String,
}

/// Everything needed to rerun one subcommand exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandSpec {
    Collect(CollectSpec),
    Exhaust(ExhaustSpec),
    Compare(CompareSpec),
    Score(ScoreSpec),
}

impl CommandSpec {
    /// Case file the command reads, when it reads one.
    pub fn case_path(&self) -> Option<&str> {
        match self {
            CommandSpec::Collect(s) => Some(&s.case),
            CommandSpec::Exhaust(s) => Some(&s.case),
            CommandSpec::Compare(s) => Some(&s.case),
            CommandSpec::Score(_) => None,
        }
    }

    pub fn out_dir(&self) -> &str {
        match self {
            CommandSpec::Collect(s) => &s.out_dir,
            CommandSpec::Exhaust(s) => &s.out_dir,
            CommandSpec::Compare(s) => &s.out_dir,
            CommandSpec::Score(s) => &s.out_dir,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            CommandSpec::Collect(s) => &s.label,
            CommandSpec::Exhaust(s) => &s.label,
            CommandSpec::Compare(s) => &s.label,
            CommandSpec::Score(s) => &s.label,
        }
    }
}

/// Record of one run. `created_at` is stamped into artifact headers, so a
/// replay that reuses it reproduces them exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub created_at: String,
    /// Hash of the case file; empty when the command reads no case.
    pub case_sha256: String,
    /// Data files read, pinned by hash.
    pub inputs: Vec<InputRef>,
    pub spec: CommandSpec,
    /// Files the run wrote, in order.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn bytes(&self) -> Vec<u8> {
        let mut buf = serde_json::to_vec_pretty(self).expect("manifest serializes");
        buf.push(b'\n');
        buf
    }
}

/// Write the manifest beside the artifacts, plus a copy named by its own
/// hash under `OPFX_CACHE_DIR` when that is set.
pub fn write_manifest(path: &Path, manifest: &RunManifest) -> CliResult {
    let bytes = manifest.bytes();
    atomic_write(path, &bytes)?;
    if let Some(dir) = env::var_os("OPFX_CACHE_DIR") {
        let dir = PathBuf::from(dir);
        fs::create_dir_all(&dir)?;
        let name = format!("{}.manifest.json", &sha256_hex(&bytes)[..16]);
        atomic_write(&dir.join(name), &bytes)?;
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}
