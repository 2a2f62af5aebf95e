//! `opfx compare`: Hausdorff-compare solution libraries against one
//! exhaustive reference set, per norm, and write the distance table plus
//! one progression curve per library and norm.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use opfx::acpf::OperatingPoint;
use opfx::case_model::parse_case;
use opfx::persist::{self, sha256_hex};
use opfx::set_metrics::{progression, DistanceRow, DistanceTable, NormKind, PqScope};

use super::{read_bytes, read_text, run_spec, stem_of, ExecOutcome};
use crate::failure::{CliResult, Failure};
use crate::manifest::{CommandSpec, CompareSpec, InputRef};

#[derive(Args)]
pub struct CompareArgs {
    /// Case file in MATPOWER format.
    #[arg(long)]
    pub case: PathBuf,
    /// Exhaustive reference set (JSON-lines).
    #[arg(long)]
    pub set: PathBuf,
    /// Solution library (JSON-lines); repeat for several.
    #[arg(long = "library", required = true)]
    pub libraries: Vec<PathBuf>,
    /// Comma-separated output-space norms: P,Q,V,Theta,PQ,PV,VTheta.
    #[arg(long, value_delimiter = ',', default_value = "PQ,PV")]
    pub norms: Vec<String>,
    /// Which injections the P/Q norms read: generators or all-buses.
    #[arg(long, default_value = "generators")]
    pub scope: String,
    /// Directory the artifacts land in.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Artifact base name; default <case>_compare.
    #[arg(long)]
    pub label: Option<String>,
    /// Timestamp recorded in the manifest (RFC 3339); defaults to now.
    #[arg(long)]
    pub stamp: Option<String>,
}

pub fn run(args: CompareArgs) -> CliResult {
    let case = args.case.to_string_lossy().into_owned();
    let label = args.label.clone().unwrap_or_else(|| format!("{}_compare", stem_of(&case)));
    let spec = CompareSpec {
        case,
        set: args.set.to_string_lossy().into_owned(),
        libraries: args.libraries.iter().map(|p| p.to_string_lossy().into_owned()).collect(),
        norms: args.norms,
        scope: args.scope,
        out_dir: args.out_dir.to_string_lossy().into_owned(),
        label,
    };
    run_spec(CommandSpec::Compare(spec), args.stamp)
}

pub fn execute(spec: &CompareSpec, _created_at: &str) -> CliResult<ExecOutcome> {
    let text = read_text(Path::new(&spec.case))?;
    let case_sha = sha256_hex(text.as_bytes());
    let net = parse_case::<f64>(&text)?;
    let norms = spec
        .norms
        .iter()
        .map(|s| s.parse::<NormKind>())
        .collect::<Result<Vec<_>, _>>()?;
    let scope: PqScope = spec.scope.parse()?;

    let mut inputs = Vec::new();
    let set_path = Path::new(&spec.set);
    inputs.push(InputRef {
        path: spec.set.clone(),
        sha256: sha256_hex(&read_bytes(set_path)?),
    });
    let (set_header, set_lines) = persist::read_exhaustive::<f64>(set_path)?;
    if set_header.case_sha256 != case_sha {
        return Err(Failure::Usage(format!(
            "set {} was built from a different case (hash mismatch)",
            spec.set
        )));
    }
    let reference: Vec<OperatingPoint<f64>> = set_lines.into_iter().map(|l| l.point).collect();

    let mut stems = HashSet::new();
    for lib in &spec.libraries {
        if !stems.insert(stem_of(lib)) {
            return Err(Failure::Usage(format!(
                "library file names must be distinct, {:?} repeats",
                stem_of(lib)
            )));
        }
    }

    let out = Path::new(&spec.out_dir);
    fs::create_dir_all(out)?;
    let dist_path = out.join(format!("{}.distances.csv", spec.label));
    let mut artifacts = vec![dist_path.display().to_string()];
    let mut table = DistanceTable::new();
    for lib_file in &spec.libraries {
        let lib_path = Path::new(lib_file);
        inputs.push(InputRef {
            path: lib_file.clone(),
            sha256: sha256_hex(&read_bytes(lib_path)?),
        });
        let (header, lib) = persist::read_library::<f64>(lib_path)?;
        if header.case_sha256 != case_sha {
            return Err(Failure::Usage(format!(
                "library {lib_file} was built from a different case (hash mismatch)"
            )));
        }
        let objective = header
            .objective
            .ok_or_else(|| Failure::Io(format!("library {lib_file} records no objective id")))?;
        for &norm in &norms {
            let prog = progression(&net, &lib, &reference, norm, scope)?;
            let prog_path = out.join(format!(
                "{}.{}.{}.csv",
                spec.label,
                stem_of(lib_file),
                norm.as_str().to_ascii_lowercase()
            ));
            persist::write_progression_csv(&prog_path, &prog)?;
            artifacts.push(prog_path.display().to_string());
            table.push(DistanceRow {
                objective: objective.clone(),
                system: net.name.clone(),
                norm,
                scope,
                value: *prog.h.last().expect("progression is nonempty"),
            });
        }
    }
    persist::write_distance_csv(&dist_path, &table)?;

    for &norm in &norms {
        if let Some((id, value)) = table.pick_best(&net.name, norm) {
            println!("d* ({}, {}): {} {:.6e}", norm.as_str(), scope.as_str(), id, value);
        }
    }
    println!("distances -> {}", dist_path.display());
    Ok(ExecOutcome { case_sha256: case_sha, inputs, artifacts, run_failure: None })
}
