//! Run-artifact file formats: JSON-lines with a typed header line for point
//! sets, CSV for flat tables, and write-then-rename so interrupted runs
//! never leave a half-written artifact at the target path.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::acpf::OperatingPoint;
use crate::exhaustive_sampler::ExhaustiveSet;
use crate::objective_catalog::SolutionLibrary;
use crate::scalar::{real, Scalar};
use crate::set_metrics::{DistanceRow, DistanceTable, Progression, ScoreCard};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("file has no header line")]
    MissingHeader,
    #[error("expected a {expected} file, found kind {found:?}")]
    WrongKind { expected: &'static str, found: String },
    #[error("bad field {field:?}: {value:?}")]
    BadField { field: &'static str, value: String },
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Writes the full contents to a sibling temp file, then renames it over
/// the target, creating parent directories as needed.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = Path::new(&tmp);
    {
        let mut f = fs::File::create(tmp_path)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp_path, path)?;
    Ok(())
}

/// First line of every JSON-lines artifact: what the file holds and which
/// case and run produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHeader {
    pub kind: String,
    pub case_sha256: String,
    pub created_at: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
}

impl FileHeader {
    pub fn library(case_sha256: &str, objective: &str, created_at: &str) -> Self {
        FileHeader {
            kind: "library".into(),
            case_sha256: case_sha256.into(),
            created_at: created_at.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            objective: Some(objective.into()),
            m: None,
            t: None,
        }
    }

    pub fn exhaustive(case_sha256: &str, m: usize, t: usize, created_at: &str) -> Self {
        FileHeader {
            kind: "exhaustive-set".into(),
            case_sha256: case_sha256.into(),
            created_at: created_at.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            objective: None,
            m: Some(m),
            t: Some(t),
        }
    }
}

fn json_lines<T: Serialize>(header: &FileHeader, items: impl Iterator<Item = T>) -> Vec<u8> {
    let mut buf = serde_json::to_vec(header).expect("header serializes");
    buf.push(b'\n');
    for item in items {
        buf.extend(serde_json::to_vec(&item).expect("line serializes"));
        buf.push(b'\n');
    }
    buf
}

fn parse_lines<T: for<'de> Deserialize<'de>>(
    text: &str,
    expected_kind: &'static str,
) -> Result<(FileHeader, Vec<T>), PersistError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(PersistError::MissingHeader)?;
    let header: FileHeader =
        serde_json::from_str(first).map_err(|source| PersistError::Json { line: 1, source })?;
    if header.kind != expected_kind {
        return Err(PersistError::WrongKind { expected: expected_kind, found: header.kind });
    }
    let mut items = Vec::new();
    for (idx, line) in lines {
        items.push(
            serde_json::from_str(line)
                .map_err(|source| PersistError::Json { line: idx + 1, source })?,
        );
    }
    Ok((header, items))
}

/// One archived point with its provenance, as stored per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryLine<F> {
    pub point: OperatingPoint<F>,
    pub provenance: crate::objective_catalog::Provenance<F>,
}

pub fn library_bytes<F: Scalar>(header: &FileHeader, lib: &SolutionLibrary<F>) -> Vec<u8> {
    json_lines(
        header,
        lib.entries.iter().map(|e| LibraryLine {
            point: e.point.clone(),
            provenance: e.provenance.clone(),
        }),
    )
}

pub fn write_library<F: Scalar>(
    path: &Path,
    header: &FileHeader,
    lib: &SolutionLibrary<F>,
) -> Result<(), PersistError> {
    atomic_write(path, &library_bytes(header, lib))
}

pub fn read_library<F: Scalar>(
    path: &Path,
) -> Result<(FileHeader, SolutionLibrary<F>), PersistError> {
    let text = fs::read_to_string(path)?;
    let (header, lines): (_, Vec<LibraryLine<F>>) = parse_lines(&text, "library")?;
    let mut lib = SolutionLibrary::new();
    for l in lines {
        lib.push(l.point, l.provenance);
    }
    Ok((header, lib))
}

/// One discovered point with the partition that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetLine<F> {
    pub digits: Vec<usize>,
    pub point: OperatingPoint<F>,
}

pub fn exhaustive_bytes<F: Scalar>(header: &FileHeader, set: &ExhaustiveSet<F>) -> Vec<u8> {
    let mut lines = Vec::with_capacity(set.len());
    for (r, rec) in set.records.iter().enumerate() {
        for point in set.points_of(r) {
            lines.push(SetLine { digits: rec.vbox.digits.clone(), point: point.clone() });
        }
    }
    json_lines(header, lines.into_iter())
}

pub fn write_exhaustive<F: Scalar>(
    path: &Path,
    header: &FileHeader,
    set: &ExhaustiveSet<F>,
) -> Result<(), PersistError> {
    atomic_write(path, &exhaustive_bytes(header, set))
}

pub fn read_exhaustive<F: Scalar>(
    path: &Path,
) -> Result<(FileHeader, Vec<SetLine<F>>), PersistError> {
    let text = fs::read_to_string(path)?;
    parse_lines(&text, "exhaustive-set")
}

/// Flat CSV of operating points: v then theta per bus, then pg and qg per
/// generator, indexed as in the case file's order.
pub fn points_csv_bytes<F: Scalar>(points: &[OperatingPoint<F>]) -> Result<Vec<u8>, PersistError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = points.first() {
        let mut head = Vec::new();
        for i in 0..first.v.len() {
            head.push(format!("v{i}"));
        }
        for i in 0..first.theta.len() {
            head.push(format!("theta{i}"));
        }
        for g in 0..first.p_gen.len() {
            head.push(format!("pg{g}"));
        }
        for g in 0..first.q_gen.len() {
            head.push(format!("qg{g}"));
        }
        w.write_record(&head)?;
        for p in points {
            let row: Vec<String> = p
                .v
                .iter()
                .chain(&p.theta)
                .chain(&p.p_gen)
                .chain(&p.q_gen)
                .map(|x| format!("{x}"))
                .collect();
            w.write_record(&row)?;
        }
    }
    Ok(w.into_inner().expect("csv buffer"))
}

pub fn write_points_csv<F: Scalar>(
    path: &Path,
    points: &[OperatingPoint<F>],
) -> Result<(), PersistError> {
    atomic_write(path, &points_csv_bytes(points)?)
}

/// Per-partition sidecar report: one row per box in partition order.
pub fn partition_report_bytes<F: Scalar>(set: &ExhaustiveSet<F>) -> Result<Vec<u8>, PersistError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "digits", "feasible", "found", "statuses", "wall_time_s"])?;
    for (i, rec) in set.records.iter().enumerate() {
        let digits: Vec<String> = rec.vbox.digits.iter().map(|d| d.to_string()).collect();
        let statuses: Vec<String> = rec.statuses.iter().map(|s| format!("{s:?}")).collect();
        w.write_record([
            i.to_string(),
            digits.join("-"),
            rec.feasible.to_string(),
            rec.found.to_string(),
            statuses.join(";"),
            format!("{:.6}", rec.wall_time_s),
        ])?;
    }
    Ok(w.into_inner().expect("csv buffer"))
}

pub fn write_partition_report<F: Scalar>(
    path: &Path,
    set: &ExhaustiveSet<F>,
) -> Result<(), PersistError> {
    atomic_write(path, &partition_report_bytes(set)?)
}

pub fn distance_csv_bytes<F: Scalar>(table: &DistanceTable<F>) -> Result<Vec<u8>, PersistError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["objective", "system", "norm", "scope", "value"])?;
    for r in &table.rows {
        w.write_record([
            r.objective.clone(),
            r.system.clone(),
            r.norm.as_str().to_string(),
            r.scope.as_str().to_string(),
            format!("{}", r.value),
        ])?;
    }
    Ok(w.into_inner().expect("csv buffer"))
}

pub fn write_distance_csv<F: Scalar>(
    path: &Path,
    table: &DistanceTable<F>,
) -> Result<(), PersistError> {
    atomic_write(path, &distance_csv_bytes(table)?)
}

pub fn read_distance_csv<F: Scalar>(path: &Path) -> Result<DistanceTable<F>, PersistError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut table = DistanceTable::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("").to_string();
        let norm = get(2)
            .parse()
            .map_err(|_| PersistError::BadField { field: "norm", value: get(2) })?;
        let scope = get(3)
            .parse()
            .map_err(|_| PersistError::BadField { field: "scope", value: get(3) })?;
        let value: f64 = get(4)
            .parse()
            .map_err(|_| PersistError::BadField { field: "value", value: get(4) })?;
        table.push(DistanceRow {
            objective: get(0),
            system: get(1),
            norm,
            scope,
            value: real(value),
        });
    }
    Ok(table)
}

/// Progression curve CSV: iteration (1-based prefix length), symmetric
/// distance, and the directed reference-to-prefix distance.
pub fn progression_csv_bytes<F: Scalar>(prog: &Progression<F>) -> Result<Vec<u8>, PersistError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "h", "h_directed"])?;
    for (i, (h, hd)) in prog.h.iter().zip(&prog.h_directed).enumerate() {
        w.write_record([(i + 1).to_string(), format!("{h}"), format!("{hd}")])?;
    }
    Ok(w.into_inner().expect("csv buffer"))
}

pub fn write_progression_csv<F: Scalar>(
    path: &Path,
    prog: &Progression<F>,
) -> Result<(), PersistError> {
    atomic_write(path, &progression_csv_bytes(prog)?)
}

/// Score table in the three-pair column layout: each Func/score pair is
/// sorted descending on its own score, ties broken by id.
pub fn scores_csv_bytes(cards: &[ScoreCard]) -> Result<Vec<u8>, PersistError> {
    let mut by_pq: Vec<&ScoreCard> = cards.iter().collect();
    by_pq.sort_by(|a, b| b.pq.cmp(&a.pq).then_with(|| a.objective.cmp(&b.objective)));
    let mut by_pv: Vec<&ScoreCard> = cards.iter().collect();
    by_pv.sort_by(|a, b| b.pv.cmp(&a.pv).then_with(|| a.objective.cmp(&b.objective)));
    let mut by_all: Vec<&ScoreCard> = cards.iter().collect();
    by_all.sort_by(|a, b| b.overall.cmp(&a.overall).then_with(|| a.objective.cmp(&b.objective)));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Func", "PQ score", "Func", "PV score", "Func", "Overall score"])?;
    for i in 0..cards.len() {
        w.write_record([
            by_pq[i].objective.clone(),
            by_pq[i].pq.to_string(),
            by_pv[i].objective.clone(),
            by_pv[i].pv.to_string(),
            by_all[i].objective.clone(),
            by_all[i].overall.to_string(),
        ])?;
    }
    Ok(w.into_inner().expect("csv buffer"))
}

pub fn write_scores_csv(path: &Path, cards: &[ScoreCard]) -> Result<(), PersistError> {
    atomic_write(path, &scores_csv_bytes(cards)?)
}
