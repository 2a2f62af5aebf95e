//! `opfx exhaust`: partition the generator-voltage hypercube, probe every
//! box, and flood the feasible ones with repulsion solves.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use opfx::case_model::parse_case;
use opfx::exhaustive_sampler::{run as sweep, SamplerConfig};
use opfx::persist::{self, sha256_hex, FileHeader};

use super::{read_text, run_spec, stem_of, ExecOutcome, SolverFlags};
use crate::failure::CliResult;
use crate::manifest::{CommandSpec, ExhaustSpec};

#[derive(Args)]
pub struct ExhaustArgs {
    /// Case file in MATPOWER format.
    #[arg(long)]
    pub case: PathBuf,
    /// Voltage divisions per generator bus.
    #[arg(long)]
    pub m: usize,
    /// Exploration solves per feasible partition.
    #[arg(long)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Refuse partitions with more boxes than this.
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: usize,
    /// Half-width of the uniform noise on each warm start's v/theta.
    #[arg(long, default_value_t = 1e-2)]
    pub perturbation: f64,
    /// Directory the artifacts land in.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Artifact base name; default <case>_m<M>_t<T>_s<seed>.
    #[arg(long)]
    pub label: Option<String>,
    /// Timestamp recorded in the artifacts (RFC 3339); defaults to now.
    #[arg(long)]
    pub stamp: Option<String>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

pub fn run(args: ExhaustArgs) -> CliResult {
    let case = args.case.to_string_lossy().into_owned();
    let label = args
        .label
        .clone()
        .unwrap_or_else(|| format!("{}_m{}_t{}_s{}", stem_of(&case), args.m, args.t, args.seed));
    let spec = ExhaustSpec {
        case,
        m: args.m,
        t: args.t,
        seed: args.seed,
        cap: args.cap,
        perturbation: args.perturbation,
        solver: args.solver.to_opts(),
        out_dir: args.out_dir.to_string_lossy().into_owned(),
        label,
    };
    run_spec(CommandSpec::Exhaust(spec), args.stamp)
}

pub fn execute(spec: &ExhaustSpec, created_at: &str) -> CliResult<ExecOutcome> {
    let text = read_text(Path::new(&spec.case))?;
    let case_sha = sha256_hex(text.as_bytes());
    let net = parse_case::<f64>(&text)?;
    let cfg = SamplerConfig {
        m: spec.m,
        t: spec.t,
        cap: spec.cap,
        perturbation: spec.perturbation,
        seed: spec.seed,
        solver: spec.solver.clone(),
    };
    let set = sweep(&net, &cfg)?;

    let out = Path::new(&spec.out_dir);
    fs::create_dir_all(out)?;
    let set_path = out.join(format!("{}.jsonl", spec.label));
    let report_path = out.join(format!("{}.partitions.csv", spec.label));
    let header = FileHeader::exhaustive(&case_sha, spec.m, spec.t, created_at);
    persist::write_exhaustive(&set_path, &header, &set)?;
    persist::write_partition_report(&report_path, &set)?;

    let feasible = set.records.iter().filter(|r| r.feasible).count();
    println!(
        "feasible fraction {:.4} ({}/{} partitions), {} points -> {}",
        set.feasible_fraction(),
        feasible,
        set.records.len(),
        set.len(),
        set_path.display()
    );
    let run_failure =
        (feasible == 0).then(|| "no feasible partition in the voltage hypercube".to_string());
    Ok(ExecOutcome {
        case_sha256: case_sha,
        inputs: Vec::new(),
        artifacts: vec![set_path.display().to_string(), report_path.display().to_string()],
        run_failure,
    })
}
