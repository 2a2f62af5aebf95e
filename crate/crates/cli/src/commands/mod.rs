//! Subcommand implementations. Fresh runs build a [`CommandSpec`] from
//! flags and go through [`run_spec`]; `replay` feeds a stored spec back
//! into [`execute_spec`] with the original timestamp.

pub mod collect;
pub mod compare;
pub mod exhaust;
pub mod parse;
pub mod replay;
pub mod score;

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use opfx::nlp_solver::SolverOpts;

use crate::failure::{CliResult, Failure};
use crate::manifest::{write_manifest, CommandSpec, InputRef, RunManifest};

/// Solver knobs shared by every command that runs the interior-point method.
#[derive(Args, Debug, Clone)]
pub struct SolverFlags {
    /// Scaled feasibility tolerance, also the raw-violation gate.
    #[arg(long, default_value_t = 1e-6)]
    pub feas_tol: f64,
    /// Scaled dual-gradient tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,
    /// Complementarity tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub comp_tol: f64,
    /// Relative objective-change tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub cost_tol: f64,
    /// Iteration cap per solve.
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
}

impl SolverFlags {
    pub fn to_opts(&self) -> SolverOpts<f64> {
        SolverOpts {
            feas_tol: self.feas_tol,
            grad_tol: self.grad_tol,
            comp_tol: self.comp_tol,
            cost_tol: self.cost_tol,
            max_iter: self.max_iter,
            ..SolverOpts::default()
        }
    }
}

/// What one command execution produced.
pub struct ExecOutcome {
    pub case_sha256: String,
    pub inputs: Vec<InputRef>,
    pub artifacts: Vec<String>,
    /// Set when artifacts were written but the run itself counts as failed.
    pub run_failure: Option<String>,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// File stem of a path, for default labels and progression file names.
pub fn stem_of(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "file".into())
}

pub fn execute_spec(spec: &CommandSpec, created_at: &str) -> CliResult<ExecOutcome> {
    match spec {
        CommandSpec::Collect(s) => collect::execute(s, created_at),
        CommandSpec::Exhaust(s) => exhaust::execute(s, created_at),
        CommandSpec::Compare(s) => compare::execute(s, created_at),
        CommandSpec::Score(s) => score::execute(s, created_at),
    }
}

/// Run a freshly built spec, then record the manifest beside the artifacts.
/// A run that wrote artifacts but still counts as failed (DNF-dominated,
/// nothing feasible) keeps its manifest and surfaces the failure afterward.
pub fn run_spec(spec: CommandSpec, stamp: Option<String>) -> CliResult {
    let created_at = stamp.unwrap_or_else(now_rfc3339);
    let outcome = execute_spec(&spec, &created_at)?;
    let path = PathBuf::from(spec.out_dir()).join(format!("{}.manifest.json", spec.label()));
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_at,
        case_sha256: outcome.case_sha256,
        inputs: outcome.inputs,
        spec,
        artifacts: outcome.artifacts,
    };
    write_manifest(&path, &manifest)?;
    println!("manifest -> {}", path.display());
    match outcome.run_failure {
        Some(msg) => Err(Failure::Run(msg)),
        None => Ok(()),
    }
}
