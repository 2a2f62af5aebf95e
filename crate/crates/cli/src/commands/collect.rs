//! `opfx collect`: build a solution library by sequential max-distance
//! collection and write it as JSON-lines plus a flat CSV.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use opfx::case_model::parse_case;
use opfx::objective_catalog::Catalog;
use opfx::persist::{self, sha256_hex, FileHeader};
use opfx::sequential_collector::{collect, CollectorConfig, DnfPolicy};

use super::{read_text, run_spec, stem_of, ExecOutcome, SolverFlags};
use crate::failure::{CliResult, Failure};
use crate::manifest::{CollectSpec, CommandSpec};

#[derive(Args)]
pub struct CollectArgs {
    /// Case file in MATPOWER format.
    #[arg(long)]
    pub case: PathBuf,
    /// Catalog id of the objective to maximize (e.g. f36).
    #[arg(long)]
    pub objective: String,
    /// Target library size including the seed.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Half-width of the uniform noise on each warm start's v/theta.
    #[arg(long, default_value_t = 1e-2)]
    pub perturbation: f64,
    /// What a failed step does: skip (retry once, log, move on) or abort.
    #[arg(long, default_value = "skip", value_parser = ["skip", "abort"])]
    pub dnf_policy: String,
    /// Directory the artifacts land in.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Artifact base name; default <case>_<objective>_n<N>_s<seed>.
    #[arg(long)]
    pub label: Option<String>,
    /// Timestamp recorded in the artifacts (RFC 3339); defaults to now.
    #[arg(long)]
    pub stamp: Option<String>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

pub fn run(args: CollectArgs) -> CliResult {
    let case = args.case.to_string_lossy().into_owned();
    let label = args.label.clone().unwrap_or_else(|| {
        format!("{}_{}_n{}_s{}", stem_of(&case), args.objective, args.n, args.seed)
    });
    let spec = CollectSpec {
        case,
        objective: args.objective,
        n: args.n,
        seed: args.seed,
        perturbation: args.perturbation,
        dnf_policy: args.dnf_policy,
        solver: args.solver.to_opts(),
        out_dir: args.out_dir.to_string_lossy().into_owned(),
        label,
    };
    run_spec(CommandSpec::Collect(spec), args.stamp)
}

pub fn execute(spec: &CollectSpec, created_at: &str) -> CliResult<ExecOutcome> {
    let text = read_text(Path::new(&spec.case))?;
    let case_sha = sha256_hex(text.as_bytes());
    let net = parse_case::<f64>(&text)?;
    let dnf_policy = match spec.dnf_policy.as_str() {
        "skip" => DnfPolicy::SkipAndPerturb,
        "abort" => DnfPolicy::Abort,
        other => return Err(Failure::Usage(format!("unknown dnf policy {other:?}"))),
    };
    let cfg = CollectorConfig {
        objective: spec.objective.clone(),
        n_points: spec.n,
        dnf_policy,
        perturbation: spec.perturbation,
        seed: spec.seed,
        solver: spec.solver.clone(),
        timestamp: created_at.to_string(),
    };
    let run = collect(&net, &Catalog::standard(), &cfg)?;

    let out = Path::new(&spec.out_dir);
    fs::create_dir_all(out)?;
    let lib_path = out.join(format!("{}.jsonl", spec.label));
    let csv_path = out.join(format!("{}.points.csv", spec.label));
    let header = FileHeader::library(&case_sha, &spec.objective, created_at);
    persist::write_library(&lib_path, &header, &run.library)?;
    persist::write_points_csv(&csv_path, &run.library.snapshot())?;

    let dnf = run.dnf_count();
    println!(
        "collected {} of {} points ({} DNF) -> {}",
        run.library.len(),
        spec.n,
        dnf,
        lib_path.display()
    );
    let run_failure = (2 * dnf > run.steps.len() && !run.steps.is_empty())
        .then(|| format!("{dnf} of {} steps did not finish", run.steps.len()));
    Ok(ExecOutcome {
        case_sha256: case_sha,
        inputs: Vec::new(),
        artifacts: vec![lib_path.display().to_string(), csv_path.display().to_string()],
        run_failure,
    })
}
