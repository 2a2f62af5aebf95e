//! `opfx score`: merge distance tables and rank the objectives,
//! awarding 10 down to 1 points per system and norm.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use opfx::persist::{self, sha256_hex};
use opfx::set_metrics::{score, DistanceTable};

use super::{read_bytes, run_spec, ExecOutcome};
use crate::failure::{CliResult, Failure};
use crate::manifest::{CommandSpec, InputRef, ScoreSpec};

#[derive(Args)]
pub struct ScoreArgs {
    /// Distance table (CSV) to merge; repeat for several.
    #[arg(long = "table", required = true)]
    pub tables: Vec<PathBuf>,
    /// Directory the artifacts land in.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Artifact base name.
    #[arg(long, default_value = "scores")]
    pub label: String,
    /// Timestamp recorded in the manifest (RFC 3339); defaults to now.
    #[arg(long)]
    pub stamp: Option<String>,
}

pub fn run(args: ScoreArgs) -> CliResult {
    let spec = ScoreSpec {
        tables: args.tables.iter().map(|p| p.to_string_lossy().into_owned()).collect(),
        out_dir: args.out_dir.to_string_lossy().into_owned(),
        label: args.label,
    };
    run_spec(CommandSpec::Score(spec), args.stamp)
}

pub fn execute(spec: &ScoreSpec, _created_at: &str) -> CliResult<ExecOutcome> {
    let mut inputs = Vec::new();
    let mut merged = DistanceTable::new();
    for table_file in &spec.tables {
        let path = Path::new(table_file);
        inputs.push(InputRef {
            path: table_file.clone(),
            sha256: sha256_hex(&read_bytes(path)?),
        });
        let table = persist::read_distance_csv::<f64>(path)?;
        for row in table.rows {
            merged.push(row);
        }
    }
    if merged.rows.is_empty() {
        return Err(Failure::Io("distance tables contain no rows".into()));
    }
    let cards = score(&merged);

    let out = Path::new(&spec.out_dir);
    fs::create_dir_all(out)?;
    let scores_path = out.join(format!("{}.csv", spec.label));
    persist::write_scores_csv(&scores_path, &cards)?;

    for card in &cards {
        println!("{} pq={} pv={} overall={}", card.objective, card.pq, card.pv, card.overall);
    }
    println!("scores -> {}", scores_path.display());
    Ok(ExecOutcome {
        case_sha256: String::new(),
        inputs,
        artifacts: vec![scores_path.display().to_string()],
        run_failure: None,
    })
}
