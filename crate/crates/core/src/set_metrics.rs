//! Set-to-set distances between collections of operating points: exact
//! Hausdorff distances under pluggable component norms, prefix progression
//! curves, best-objective selection, and competition-style scoring of
//! objectives across systems.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acpf::OperatingPoint;
use crate::case_model::Network;
use crate::objective_catalog::SolutionLibrary;
use crate::scalar::Scalar;

/// Which components of an operating point enter the distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    P,
    Q,
    V,
    Theta,
    /// Active and reactive injections stacked.
    PQ,
    /// Active injections and voltage magnitudes stacked.
    PV,
    /// Voltage magnitudes and angles stacked.
    VTheta,
}

impl NormKind {
    pub const ALL: [NormKind; 7] = [
        NormKind::P,
        NormKind::Q,
        NormKind::V,
        NormKind::Theta,
        NormKind::PQ,
        NormKind::PV,
        NormKind::VTheta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::P => "P",
            NormKind::Q => "Q",
            NormKind::V => "V",
            NormKind::Theta => "Theta",
            NormKind::PQ => "PQ",
            NormKind::PV => "PV",
            NormKind::VTheta => "VTheta",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = SetMetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Ok(NormKind::P),
            "q" => Ok(NormKind::Q),
            "v" => Ok(NormKind::V),
            "theta" => Ok(NormKind::Theta),
            "pq" => Ok(NormKind::PQ),
            "pv" => Ok(NormKind::PV),
            "vtheta" => Ok(NormKind::VTheta),
            _ => Err(SetMetricsError::UnknownNorm(s.to_string())),
        }
    }
}

/// Whether P/Q components are per generator or aggregated per bus. Voltage
/// and angle components always cover every bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PqScope {
    /// One component per generator, in case order.
    Generators,
    /// Net injection (generation minus load) per bus.
    AllBuses,
}

impl PqScope {
    pub fn as_str(self) -> &'static str {
        match self {
            PqScope::Generators => "generators",
            PqScope::AllBuses => "all-buses",
        }
    }
}

impl std::str::FromStr for PqScope {
    type Err = SetMetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "generators" => Ok(PqScope::Generators),
            "all-buses" | "allbuses" => Ok(PqScope::AllBuses),
            _ => Err(SetMetricsError::UnknownScope(s.to_string())),
        }
    }
}

impl Default for PqScope {
    fn default() -> Self {
        PqScope::Generators
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SetMetricsError {
    #[error("point set is empty")]
    EmptySet,
    #[error("point dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unknown norm {0:?}")]
    UnknownNorm(String),
    #[error("unknown scope {0:?}")]
    UnknownScope(String),
}

fn active_per_bus<F: Scalar>(net: &Network<F>, op: &OperatingPoint<F>) -> Vec<F> {
    let mut p: Vec<F> = net.buses.iter().map(|b| -b.p_load).collect();
    for (g, gen) in net.gens.iter().enumerate() {
        p[gen.bus] += op.p_gen[g];
    }
    p
}

fn reactive_per_bus<F: Scalar>(net: &Network<F>, op: &OperatingPoint<F>) -> Vec<F> {
    let mut q: Vec<F> = net.buses.iter().map(|b| -b.q_load).collect();
    for (g, gen) in net.gens.iter().enumerate() {
        q[gen.bus] += op.q_gen[g];
    }
    q
}

/// Flattens one operating point into the component vector the chosen norm
/// measures distances over.
pub fn component_vector<F: Scalar>(
    net: &Network<F>,
    op: &OperatingPoint<F>,
    norm: NormKind,
    scope: PqScope,
) -> Vec<F> {
    let p = || match scope {
        PqScope::Generators => op.p_gen.clone(),
        PqScope::AllBuses => active_per_bus(net, op),
    };
    let q = || match scope {
        PqScope::Generators => op.q_gen.clone(),
        PqScope::AllBuses => reactive_per_bus(net, op),
    };
    match norm {
        NormKind::P => p(),
        NormKind::Q => q(),
        NormKind::V => op.v.clone(),
        NormKind::Theta => op.theta.clone(),
        NormKind::PQ => {
            let mut out = p();
            out.extend(q());
            out
        }
        NormKind::PV => {
            let mut out = p();
            out.extend_from_slice(&op.v);
            out
        }
        NormKind::VTheta => {
            let mut out = op.v.clone();
            out.extend_from_slice(&op.theta);
            out
        }
    }
}

fn euclid<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut s = F::zero();
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s.sqrt()
}

/// max over a in A of min over b in B of ||a - b||, by the exact double
/// loop — no early breaks, so the value is reproducible to the bit.
pub fn directed_hausdorff_vecs<F: Scalar>(
    a: &[Vec<F>],
    b: &[Vec<F>],
) -> Result<F, SetMetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(SetMetricsError::EmptySet);
    }
    let dim = a[0].len();
    for v in a.iter().chain(b) {
        if v.len() != dim {
            return Err(SetMetricsError::DimensionMismatch(dim, v.len()));
        }
    }
    let mut worst = F::neg_infinity();
    for x in a {
        let mut best = F::infinity();
        for y in b {
            best = best.min(euclid(x, y));
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

pub fn hausdorff_vecs<F: Scalar>(a: &[Vec<F>], b: &[Vec<F>]) -> Result<F, SetMetricsError> {
    Ok(directed_hausdorff_vecs(a, b)?.max(directed_hausdorff_vecs(b, a)?))
}

fn components<F: Scalar>(
    net: &Network<F>,
    pts: &[OperatingPoint<F>],
    norm: NormKind,
    scope: PqScope,
) -> Vec<Vec<F>> {
    pts.iter().map(|p| component_vector(net, p, norm, scope)).collect()
}

/// Directed Hausdorff distance from A to B under the chosen norm.
pub fn directed_hausdorff<F: Scalar>(
    net: &Network<F>,
    a: &[OperatingPoint<F>],
    b: &[OperatingPoint<F>],
    norm: NormKind,
    scope: PqScope,
) -> Result<F, SetMetricsError> {
    directed_hausdorff_vecs(&components(net, a, norm, scope), &components(net, b, norm, scope))
}

/// Symmetric Hausdorff distance: the larger of the two directed values.
pub fn hausdorff<F: Scalar>(
    net: &Network<F>,
    a: &[OperatingPoint<F>],
    b: &[OperatingPoint<F>],
    norm: NormKind,
    scope: PqScope,
) -> Result<F, SetMetricsError> {
    hausdorff_vecs(&components(net, a, norm, scope), &components(net, b, norm, scope))
}

/// Distance curves over library prefixes: `h[i]` is the symmetric Hausdorff
/// distance between the first i+1 library points and the reference set,
/// `h_directed[i]` the directed distance from the reference set to that
/// prefix (non-increasing, since the prefix only gains points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progression<F> {
    pub h: Vec<F>,
    pub h_directed: Vec<F>,
}

pub fn progression<F: Scalar>(
    net: &Network<F>,
    lib: &SolutionLibrary<F>,
    reference: &[OperatingPoint<F>],
    norm: NormKind,
    scope: PqScope,
) -> Result<Progression<F>, SetMetricsError> {
    if lib.is_empty() || reference.is_empty() {
        return Err(SetMetricsError::EmptySet);
    }
    let lib_pts = lib.snapshot();
    let sv = components(net, &lib_pts, norm, scope);
    let ev = components(net, reference, norm, scope);
    let dim = ev[0].len();
    for v in ev.iter().chain(&sv) {
        if v.len() != dim {
            return Err(SetMetricsError::DimensionMismatch(dim, v.len()));
        }
    }

    // Grow the prefix one point at a time, folding mins and maxes in the
    // same index order a from-scratch recomputation would use, so the curve
    // matches it bit for bit.
    let mut min_to_prefix = vec![F::infinity(); ev.len()];
    let mut prefix_to_ref = F::neg_infinity();
    let mut h = Vec::with_capacity(sv.len());
    let mut h_directed = Vec::with_capacity(sv.len());
    for s in &sv {
        let mut nearest = F::infinity();
        for e in &ev {
            nearest = nearest.min(euclid(s, e));
        }
        prefix_to_ref = prefix_to_ref.max(nearest);
        for (j, e) in ev.iter().enumerate() {
            min_to_prefix[j] = min_to_prefix[j].min(euclid(e, s));
        }
        let mut ref_to_prefix = F::neg_infinity();
        for &m in &min_to_prefix {
            ref_to_prefix = ref_to_prefix.max(m);
        }
        h.push(prefix_to_ref.max(ref_to_prefix));
        h_directed.push(ref_to_prefix);
    }
    Ok(Progression { h, h_directed })
}

/// One measured distance: which objective's library, on which system, under
/// which norm, and with which injection scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow<F> {
    pub objective: String,
    pub system: String,
    pub norm: NormKind,
    pub scope: PqScope,
    pub value: F,
}

/// All measured distances of one comparison run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceTable<F> {
    pub rows: Vec<DistanceRow<F>>,
}

impl<F: Scalar> DistanceTable<F> {
    pub fn new() -> Self {
        DistanceTable { rows: Vec::new() }
    }

    pub fn push(&mut self, row: DistanceRow<F>) {
        self.rows.push(row);
    }

    fn slice<'a>(
        &'a self,
        system: &'a str,
        norm: NormKind,
    ) -> impl Iterator<Item = &'a DistanceRow<F>> + 'a {
        self.rows.iter().filter(move |r| r.system == system && r.norm == norm)
    }

    /// Distinct system names in first-appearance order.
    pub fn systems(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|s| *s == r.system) {
                out.push(&r.system);
            }
        }
        out
    }

    /// The objective with the smallest distance on one (system, norm)
    /// slice; exact ties go to the lexicographically smaller id.
    pub fn pick_best(&self, system: &str, norm: NormKind) -> Option<(&str, F)> {
        let mut best: Option<(&str, F)> = None;
        for r in self.rows.iter().filter(|r| r.system == system && r.norm == norm) {
            let better = match &best {
                None => true,
                Some((id, v)) => r.value < *v || (r.value == *v && r.objective.as_str() < *id),
            };
            if better {
                best = Some((&r.objective, r.value));
            }
        }
        best
    }
}

/// Points one objective earned, split by norm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub objective: String,
    pub pq: u32,
    pub pv: u32,
    pub overall: u32,
}

/// Points for one (system, norm) slice: sorted ascending by distance, rank
/// r earns 11 - r down to one point for rank 10. Exact value ties share the
/// higher rank's points and use up the ranks they span.
fn slice_points<F: Scalar>(rows: &[(&str, F)]) -> Vec<(String, u32)> {
    let mut sorted: Vec<&(&str, F)> = rows.iter().collect();
    sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(b.0)));
    let mut out = Vec::with_capacity(sorted.len());
    let mut rank = 0usize;
    for (k, row) in sorted.iter().enumerate() {
        if k == 0 || row.1 != sorted[k - 1].1 {
            rank = k + 1;
        }
        let points = 11usize.saturating_sub(rank).min(10) as u32;
        out.push((row.0.to_string(), points));
    }
    out
}

/// Awards competition points per system for the PQ and PV norms and sums
/// them per objective; `overall` adds the two norm totals.
pub fn score<F: Scalar>(table: &DistanceTable<F>) -> Vec<ScoreCard> {
    use std::collections::BTreeMap;
    let mut tally: BTreeMap<String, (u32, u32)> = BTreeMap::new();
    for system in table.systems() {
        for norm in [NormKind::PQ, NormKind::PV] {
            let rows: Vec<(&str, F)> =
                table.slice(system, norm).map(|r| (r.objective.as_str(), r.value)).collect();
            for (id, pts) in slice_points(&rows) {
                let e = tally.entry(id).or_insert((0, 0));
                match norm {
                    NormKind::PQ => e.0 += pts,
                    _ => e.1 += pts,
                }
            }
        }
    }
    let mut cards: Vec<ScoreCard> = tally
        .into_iter()
        .map(|(objective, (pq, pv))| ScoreCard { objective, pq, pv, overall: pq + pv })
        .collect();
    cards.sort_by(|a, b| b.overall.cmp(&a.overall).then_with(|| a.objective.cmp(&b.objective)));
    cards
}
