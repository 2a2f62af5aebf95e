//! `opfx replay`: rerun a recorded manifest with its original timestamp
//! and reproduce the artifacts byte for byte. Inputs are verified by hash
//! before anything is overwritten; the manifest itself is left untouched.

use std::path::{Path, PathBuf};

use clap::Args;
use opfx::persist::sha256_hex;

use super::{execute_spec, read_bytes};
use crate::failure::{CliResult, Failure};
use crate::manifest::read_manifest;

#[derive(Args)]
pub struct ReplayArgs {
    /// Manifest recorded by a previous run.
    #[arg(long)]
    pub manifest: PathBuf,
}

pub fn run(args: ReplayArgs) -> CliResult {
    let manifest = read_manifest(&args.manifest)?;
    if let Some(case) = manifest.spec.case_path() {
        let bytes = read_bytes(Path::new(case))?;
        if sha256_hex(&bytes) != manifest.case_sha256 {
            return Err(Failure::Usage(format!(
                "case file {case} changed since the original run"
            )));
        }
    }
    for input in &manifest.inputs {
        let bytes = read_bytes(Path::new(&input.path))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(Failure::Usage(format!(
                "input {} changed since the original run",
                input.path
            )));
        }
    }
    let outcome = execute_spec(&manifest.spec, &manifest.created_at)?;
    if outcome.artifacts != manifest.artifacts {
        return Err(Failure::Io(
            "replay wrote a different artifact list than the manifest records".into(),
        ));
    }
    println!(
        "replayed {} -> {} artifacts",
        args.manifest.display(),
        outcome.artifacts.len()
    );
    match outcome.run_failure {
        Some(msg) => Err(Failure::Run(msg)),
        None => Ok(()),
    }
}
