//! Parser for the MATPOWER case subset: `mpc.baseMVA`, `mpc.bus`,
//! `mpc.gen`, `mpc.branch`. Generator cost tables are recognized and
//! discarded; unknown `mpc.*` fields are skipped. Quantities arrive in
//! MW/MVAr/degrees and leave in per-unit/radians.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Branch, Bus, Gen, Network};
use crate::scalar::{real, Scalar};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: bad number `{token}`")]
    Number { line: usize, token: String },
    #[error("line {line}: {table} row has {got} columns, expected at least {want}")]
    Columns { line: usize, table: &'static str, got: usize, want: usize },
    #[error("missing required field mpc.{0}")]
    MissingField(&'static str),
    #[error("line {line}: duplicate bus number {id}")]
    DuplicateBus { line: usize, id: usize },
    #[error("line {line}: reference to unknown bus {id}")]
    UnknownBus { line: usize, id: usize },
    #[error("no slack bus (type 3) in bus table")]
    NoSlack,
    #[error("multiple slack buses (type 3) in bus table")]
    MultipleSlack,
    #[error("base MVA must be positive, got {0}")]
    BadBase(f64),
}

struct Row {
    line: usize,
    values: Vec<f64>,
}

struct RawCase {
    name: String,
    base_mva: Option<f64>,
    tables: BTreeMap<String, Vec<Row>>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

/// Accumulates one `mpc.<table> = [ ... ];` block. Rows end at ';', the
/// block at ']'; both may share lines with data.
struct MatrixScan {
    field: String,
    rows: Vec<Row>,
    pending: Vec<f64>,
    pending_line: usize,
}

impl MatrixScan {
    fn new(field: String) -> Self {
        MatrixScan { field, rows: Vec::new(), pending: Vec::new(), pending_line: 0 }
    }

    fn push_numbers(&mut self, chunk: &str, line_no: usize) -> Result<(), ParseError> {
        for token in chunk.split([' ', '\t', ',']).filter(|t| !t.is_empty()) {
            let v: f64 = token
                .parse()
                .map_err(|_| ParseError::Number { line: line_no, token: token.into() })?;
            if self.pending.is_empty() {
                self.pending_line = line_no;
            }
            self.pending.push(v);
        }
        Ok(())
    }

    fn end_row(&mut self) {
        if !self.pending.is_empty() {
            self.rows.push(Row { line: self.pending_line, values: std::mem::take(&mut self.pending) });
        }
    }

    /// Consumes matrix text; returns true when the closing ']' was seen.
    fn feed(&mut self, text: &str, line_no: usize) -> Result<bool, ParseError> {
        let mut rest = text.trim_start();
        loop {
            let stop_row = rest.find(';');
            let stop_mat = rest.find(']');
            let (cut, closes) = match (stop_row, stop_mat) {
                (Some(r), Some(m)) if r < m => (r, false),
                (_, Some(m)) => (m, true),
                (Some(r), None) => (r, false),
                (None, None) => {
                    self.push_numbers(rest, line_no)?;
                    return Ok(false);
                }
            };
            let (head, tail) = rest.split_at(cut);
            self.push_numbers(head, line_no)?;
            self.end_row();
            if closes {
                return Ok(true);
            }
            rest = tail[1..].trim_start();
            if rest.is_empty() {
                return Ok(false);
            }
        }
    }
}

fn scan(text: &str) -> Result<RawCase, ParseError> {
    let mut raw = RawCase { name: String::new(), base_mva: None, tables: BTreeMap::new() };
    let mut current: Option<MatrixScan> = None;

    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(full_line).trim();
        if line.is_empty() {
            continue;
        }

        if let Some(scan) = current.as_mut() {
            if scan.feed(line, line_no)? {
                let done = current.take().unwrap();
                raw.tables.insert(done.field, done.rows);
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix("function") {
            // `function mpc = case_name`
            if let Some(eq) = rest.find('=') {
                raw.name = rest[eq + 1..].trim().trim_end_matches(';').trim().to_string();
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix("mpc.") {
            let eq = rest.find('=').ok_or_else(|| ParseError::Syntax {
                line: line_no,
                msg: "expected `=` after mpc field".into(),
            })?;
            let field = rest[..eq].trim().to_string();
            let value = rest[eq + 1..].trim();
            if let Some(matrix) = value.strip_prefix('[') {
                let mut scan = MatrixScan::new(field);
                if scan.feed(matrix, line_no)? {
                    raw.tables.insert(scan.field, scan.rows);
                } else {
                    current = Some(scan);
                }
            } else if field == "baseMVA" {
                let token = value.trim_end_matches(';').trim();
                let v: f64 = token
                    .parse()
                    .map_err(|_| ParseError::Number { line: line_no, token: token.into() })?;
                raw.base_mva = Some(v);
            }
            // Scalar/string fields other than baseMVA (version, names...) are skipped.
            continue;
        }
        // Anything else (e.g. `end`) is ignored.
    }

    if current.is_some() {
        return Err(ParseError::Syntax { line: text.lines().count(), msg: "unterminated matrix".into() });
    }
    Ok(raw)
}

fn col(row: &Row, i: usize) -> f64 {
    row.values[i]
}

/// Parses MATPOWER case text into a per-unit network.
pub fn parse_case<F: Scalar>(text: &str) -> Result<Network<F>, ParseError> {
    let raw = scan(text)?;
    let base = raw.base_mva.ok_or(ParseError::MissingField("baseMVA"))?;
    if !(base > 0.0) {
        return Err(ParseError::BadBase(base));
    }
    let bus_rows = raw.tables.get("bus").ok_or(ParseError::MissingField("bus"))?;
    let gen_rows = raw.tables.get("gen").ok_or(ParseError::MissingField("gen"))?;
    let branch_rows = raw.tables.get("branch").ok_or(ParseError::MissingField("branch"))?;

    let per_unit = |mw: f64| real::<F>(mw / base);
    let rad = |deg: f64| real::<F>(deg.to_radians());

    let mut buses = Vec::with_capacity(bus_rows.len());
    let mut bus_index: BTreeMap<usize, usize> = BTreeMap::new();
    let mut slack: Option<usize> = None;
    for row in bus_rows {
        if row.values.len() < 13 {
            return Err(ParseError::Columns { line: row.line, table: "bus", got: row.values.len(), want: 13 });
        }
        let id = col(row, 0) as usize;
        if bus_index.insert(id, buses.len()).is_some() {
            return Err(ParseError::DuplicateBus { line: row.line, id });
        }
        if col(row, 1) as i64 == 3 {
            if slack.replace(buses.len()).is_some() {
                return Err(ParseError::MultipleSlack);
            }
        }
        buses.push(Bus {
            id,
            v_min: real(col(row, 12)),
            v_max: real(col(row, 11)),
            p_load: per_unit(col(row, 2)),
            q_load: per_unit(col(row, 3)),
            gs: per_unit(col(row, 4)),
            bs: per_unit(col(row, 5)),
        });
    }
    let slack_bus = slack.ok_or(ParseError::NoSlack)?;

    let mut gens = Vec::with_capacity(gen_rows.len());
    for row in gen_rows {
        if row.values.len() < 10 {
            return Err(ParseError::Columns { line: row.line, table: "gen", got: row.values.len(), want: 10 });
        }
        if col(row, 7) <= 0.0 {
            continue; // out of service
        }
        let id = col(row, 0) as usize;
        let bus = *bus_index
            .get(&id)
            .ok_or(ParseError::UnknownBus { line: row.line, id })?;
        gens.push(Gen {
            bus,
            p_min: per_unit(col(row, 9)),
            p_max: per_unit(col(row, 8)),
            q_min: per_unit(col(row, 4)),
            q_max: per_unit(col(row, 3)),
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    for row in branch_rows {
        if row.values.len() < 11 {
            return Err(ParseError::Columns { line: row.line, table: "branch", got: row.values.len(), want: 11 });
        }
        if col(row, 10) == 0.0 {
            continue; // out of service
        }
        let fid = col(row, 0) as usize;
        let tid = col(row, 1) as usize;
        let from = *bus_index.get(&fid).ok_or(ParseError::UnknownBus { line: row.line, id: fid })?;
        let to = *bus_index.get(&tid).ok_or(ParseError::UnknownBus { line: row.line, id: tid })?;
        let ratio = col(row, 8);
        // ANGMIN/ANGMAX of 0 (or beyond a full turn) mean "unbounded" in
        // MATPOWER files; the model keeps a symmetric bound, default pi/2.
        let angle_diff_max = if row.values.len() >= 13 {
            let lo = col(row, 11);
            let hi = col(row, 12);
            if (lo == 0.0 && hi == 0.0) || lo <= -360.0 || hi >= 360.0 {
                real(std::f64::consts::FRAC_PI_2)
            } else {
                rad(lo.abs().min(hi.abs()))
            }
        } else {
            real(std::f64::consts::FRAC_PI_2)
        };
        branches.push(Branch {
            from,
            to,
            r: real(col(row, 2)),
            x: real(col(row, 3)),
            b_charge: real(col(row, 4)),
            tap: if ratio == 0.0 { F::one() } else { real(ratio) },
            shift: rad(col(row, 9)),
            s_max: if col(row, 5).is_finite() { per_unit(col(row, 5)) } else { F::zero() },
            angle_diff_max,
        });
    }

    Ok(Network {
        name: if raw.name.is_empty() { "case".into() } else { raw.name },
        base_mva: real(base),
        slack_bus,
        buses,
        gens,
        branches,
    })
}
