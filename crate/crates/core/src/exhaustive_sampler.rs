//! Partitioned exhaustive sampling: slice the generator-bus voltage
//! hypercube into m^n congruent boxes, probe each box for feasibility with a
//! zero-objective solve, and pull up to T points out of every feasible box
//! by maximizing log squared generator-PQ distance to everything discovered
//! so far — the repulsion archive grows globally across boxes, so later
//! partitions are pushed away from earlier finds.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acpf::{OperatingPoint, XLayout};
use crate::case_model::{build_admittance, Admittance, AdmittanceError, Network};
use crate::nlp_solver::{SolveResult, SolveStatus, SolverOpts};
use crate::objective_catalog::{make_objective, Metric, ObjectiveSpec, Transform, VarGroup};
use crate::opf_problem::{certify, find_feasible_point, solve_opf, VoltageBounds};
use crate::scalar::{real, Scalar};
use crate::sequential_collector::{perturbed_start, splitmix64, CERT_TOL};

/// Two stored points closer than this in generator-PQ norm count as one.
pub const DUPLICATE_TOL: f64 = 1e-6;

/// How far outside its box a solution may sit and still be clamped onto the
/// boundary; matches the solver's raw feasibility tolerance, so an optimal
/// answer is never rejected for containment alone.
pub const CLAMP_WINDOW: f64 = 1e-6;

/// One cell of the generator-voltage partition: a voltage sub-range per
/// generator bus, addressed by a mixed-radix digit vector (digit 0 belongs
/// to the lowest-numbered generator bus and varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageBox<F> {
    pub digits: Vec<usize>,
    /// Bus index per digit: the distinct generator buses, ascending.
    pub gen_buses: Vec<usize>,
    pub lo: Vec<F>,
    pub hi: Vec<F>,
}

impl<F: Scalar> VoltageBox<F> {
    /// Full per-bus bound vectors: box ranges on generator buses, case
    /// bounds everywhere else.
    pub fn bounds(&self, net: &Network<F>) -> VoltageBounds<F> {
        let mut lo: Vec<F> = net.buses.iter().map(|b| b.v_min).collect();
        let mut hi: Vec<F> = net.buses.iter().map(|b| b.v_max).collect();
        for (j, &b) in self.gen_buses.iter().enumerate() {
            lo[b] = self.lo[j];
            hi[b] = self.hi[j];
        }
        VoltageBounds { lo, hi }
    }

    /// Flat start confined to the box: generator-bus voltages at the box
    /// midpoint, everything else at the case midpoints, angles zero.
    pub fn midpoint_start(&self, net: &Network<F>) -> OperatingPoint<F> {
        let half = real::<F>(0.5);
        let mut op = OperatingPoint::flat_start(net);
        for (j, &b) in self.gen_buses.iter().enumerate() {
            op.v[b] = (self.lo[j] + self.hi[j]) * half;
        }
        op
    }

    /// Whether every generator-bus voltage lies inside the box, allowing
    /// `slack` beyond either edge.
    pub fn contains(&self, op: &OperatingPoint<F>, slack: F) -> bool {
        self.gen_buses
            .iter()
            .enumerate()
            .all(|(j, &b)| op.v[b] >= self.lo[j] - slack && op.v[b] <= self.hi[j] + slack)
    }

    /// Pulls generator-bus voltages no more than `window` outside the box
    /// onto its boundary. Returns false when some voltage is farther out
    /// than that.
    fn clamp_into(&self, op: &mut OperatingPoint<F>, window: F) -> bool {
        if !self.contains(op, window) {
            return false;
        }
        for (j, &b) in self.gen_buses.iter().enumerate() {
            op.v[b] = op.v[b].max(self.lo[j]).min(self.hi[j]);
        }
        true
    }
}

/// Outcome of one partition: the probe verdict and what exploration found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord<F> {
    pub vbox: VoltageBox<F>,
    pub feasible: bool,
    /// Index into the point list of this partition's first find.
    pub first_point: usize,
    /// Number of points this partition contributed.
    pub found: usize,
    /// Probe status first, then one status per exploration solve.
    pub statuses: Vec<SolveStatus>,
    pub wall_time_s: f64,
}

/// Everything a sampling run discovered: the global point list in discovery
/// order plus one record per partition in mixed-radix order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveSet<F> {
    pub points: Vec<OperatingPoint<F>>,
    pub records: Vec<PartitionRecord<F>>,
}

impl<F> ExhaustiveSet<F> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The slice of points partition `rec` contributed.
    pub fn points_of(&self, rec: usize) -> &[OperatingPoint<F>] {
        let r = &self.records[rec];
        &self.points[r.first_point..r.first_point + r.found]
    }

    /// Share of partitions whose probe succeeded.
    pub fn feasible_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let k = self.records.iter().filter(|r| r.feasible).count();
        k as f64 / self.records.len() as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig<F> {
    /// Divisions per generator bus.
    pub m: usize,
    /// Exploration solves per feasible partition.
    pub t: usize,
    /// Refuse partitions with more boxes than this.
    pub cap: usize,
    /// Half-width of the seeded uniform noise on each warm start's v/theta.
    pub perturbation: F,
    pub seed: u64,
    pub solver: SolverOpts<F>,
}

impl<F: Scalar> SamplerConfig<F> {
    pub fn new(m: usize, t: usize) -> Self {
        SamplerConfig {
            m,
            t,
            cap: 1_000_000,
            perturbation: real(1e-2),
            seed: 0,
            solver: SolverOpts::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("config invalid: {0}")]
    BadConfig(String),
    #[error("partition would need {required} boxes, above the cap of {cap}")]
    PartitionCap { required: u128, cap: usize },
    #[error(transparent)]
    Network(#[from] AdmittanceError),
    #[error("box {digits:?} is not feasible: probe status {status:?}")]
    BoxNotFeasible { digits: Vec<usize>, status: SolveStatus },
}

/// The exploration objective: log of squared Euclidean distance over
/// generator injections, summed over the archive.
pub fn exploration_spec() -> ObjectiveSpec {
    ObjectiveSpec {
        id: "f03".to_string(),
        metric: Metric::SquaredEuclidean,
        transform: Transform::LogE,
        groups: vec![VarGroup::PGen, VarGroup::QGen],
    }
}

/// Distinct buses hosting at least one generator, ascending.
fn gen_bus_list<F>(net: &Network<F>) -> Vec<usize> {
    net.gens.iter().map(|g| g.bus).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Splits every generator bus's voltage range into `m` equal sub-ranges and
/// returns all m^n combinations in mixed-radix order. Interior edges come
/// from one shared table per bus, so adjacent boxes carry bitwise-identical
/// boundaries and each bus's sub-ranges telescope back to [v_min, v_max].
pub fn partition<F: Scalar>(
    net: &Network<F>,
    m: usize,
    cap: usize,
) -> Result<Vec<VoltageBox<F>>, SampleError> {
    if m < 1 {
        return Err(SampleError::BadConfig("m must be at least 1".into()));
    }
    let gen_buses = gen_bus_list(net);
    if gen_buses.is_empty() {
        return Err(SampleError::BadConfig("network has no generators".into()));
    }
    let mut required: u128 = 1;
    for _ in &gen_buses {
        required = required.saturating_mul(m as u128);
    }
    if required > cap as u128 {
        return Err(SampleError::PartitionCap { required, cap });
    }
    let count = required as usize;

    let mut edges: Vec<Vec<F>> = Vec::with_capacity(gen_buses.len());
    for &b in &gen_buses {
        let lo = net.buses[b].v_min;
        let hi = net.buses[b].v_max;
        if !(lo < hi) {
            return Err(SampleError::BadConfig(format!(
                "bus {} has no voltage range to divide",
                net.buses[b].id
            )));
        }
        let width = hi - lo;
        let table: Vec<F> = (0..=m)
            .map(|j| {
                if j == 0 {
                    lo
                } else if j == m {
                    hi
                } else {
                    lo + width * real::<F>(j as f64) / real::<F>(m as f64)
                }
            })
            .collect();
        edges.push(table);
    }

    let mut boxes = Vec::with_capacity(count);
    for ordinal in 0..count {
        let mut digits = vec![0usize; gen_buses.len()];
        let mut rest = ordinal;
        for d in &mut digits {
            *d = rest % m;
            rest /= m;
        }
        let lo = digits.iter().enumerate().map(|(j, &d)| edges[j][d]).collect();
        let hi = digits.iter().enumerate().map(|(j, &d)| edges[j][d + 1]).collect();
        boxes.push(VoltageBox { digits, gen_buses: gen_buses.clone(), lo, hi });
    }
    Ok(boxes)
}

/// Zero-objective solve from the box midpoint with generator-bus voltage
/// bounds replaced by the box; Optimal means the partition holds a feasible
/// point. Independent of anything discovered elsewhere.
pub fn probe<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    vbox: &VoltageBox<F>,
    opts: &SolverOpts<F>,
) -> SolveResult<F> {
    find_feasible_point(net, adm, Some(&vbox.bounds(net)), &vbox.midpoint_start(net), opts)
}

/// Per-box stream of perturbation seeds, independent of how many boxes the
/// partition has.
fn box_salt(seed: u64, digits: &[usize]) -> u64 {
    digits.iter().fold(splitmix64(seed), |s, &d| splitmix64(s.wrapping_add(d as u64 + 1)))
}

fn min_pq_distance<F: Scalar>(op: &OperatingPoint<F>, points: &[OperatingPoint<F>]) -> F {
    let mut best = F::infinity();
    for p in points {
        let mut d2 = F::zero();
        for g in 0..op.p_gen.len() {
            let dp = op.p_gen[g] - p.p_gen[g];
            let dq = op.q_gen[g] - p.q_gen[g];
            d2 = d2 + dp * dp + dq * dq;
        }
        best = best.min(d2.sqrt());
    }
    best
}

/// What exploring one partition produced. The same points are already
/// appended to the shared archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreOutcome<F> {
    pub found: Vec<OperatingPoint<F>>,
    pub statuses: Vec<SolveStatus>,
    pub wall_time_s: f64,
}

/// Exploration loop given a known-feasible anchor inside the box: up to `t`
/// repulsion solves, each warm-started from a seeded perturbation of the
/// latest solution, each appended to `xe` immediately so the next solve is
/// pushed away from it. A solve that does not finish stops the loop; one
/// that lands within [`DUPLICATE_TOL`] of an archived point is discarded and
/// the loop continues.
fn explore_from<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    vbox: &VoltageBox<F>,
    t: usize,
    probe_x: &OperatingPoint<F>,
    xe: &mut Vec<OperatingPoint<F>>,
    cfg: &SamplerConfig<F>,
) -> ExploreOutcome<F> {
    let layout = XLayout::of(net);
    let spec = exploration_spec();
    let bounds = vbox.bounds(net);
    let salt = box_salt(cfg.seed, &vbox.digits);
    let mut found = Vec::new();
    let mut statuses = Vec::new();
    let mut wall = 0.0;
    let mut anchor = probe_x.clone();
    for k in 0..t {
        let start =
            perturbed_start(&anchor, cfg.perturbation, splitmix64(salt.wrapping_add(k as u64)));
        let objective = make_objective(&spec, layout, xe.clone());
        let res = solve_opf(net, adm, Some(&bounds), objective, &start, &cfg.solver);
        wall += res.wall_time_s;
        if res.status != SolveStatus::Optimal {
            statuses.push(res.status);
            break;
        }
        let mut op = OperatingPoint::from_slice(layout, &res.x);
        if !vbox.clamp_into(&mut op, real(CLAMP_WINDOW))
            || certify(net, adm, &op) > real(CERT_TOL)
        {
            statuses.push(SolveStatus::NumericalFailure);
            break;
        }
        statuses.push(SolveStatus::Optimal);
        anchor = op.clone();
        if min_pq_distance(&op, xe) <= real(DUPLICATE_TOL) {
            continue;
        }
        xe.push(op.clone());
        found.push(op);
    }
    ExploreOutcome { found, statuses, wall_time_s: wall }
}

/// Public exploration entry: verifies the box is feasible (re-running the
/// probe), then runs the loop against the shared archive. Passing a box
/// whose probe fails is a precondition violation.
pub fn explore<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    vbox: &VoltageBox<F>,
    t: usize,
    xe: &mut Vec<OperatingPoint<F>>,
    cfg: &SamplerConfig<F>,
) -> Result<ExploreOutcome<F>, SampleError> {
    let pr = probe(net, adm, vbox, &cfg.solver);
    if pr.status != SolveStatus::Optimal {
        return Err(SampleError::BoxNotFeasible {
            digits: vbox.digits.clone(),
            status: pr.status,
        });
    }
    let probe_x = OperatingPoint::from_slice(XLayout::of(net), &pr.x);
    Ok(explore_from(net, adm, vbox, t, &probe_x, xe, cfg))
}

/// Full sweep: probe every partition in mixed-radix order and explore the
/// feasible ones, sharing one archive. Solve count is at most m^n probes
/// plus t per feasible partition.
pub fn run<F: Scalar>(
    net: &Network<F>,
    cfg: &SamplerConfig<F>,
) -> Result<ExhaustiveSet<F>, SampleError> {
    let adm = build_admittance(net)?;
    let boxes = partition(net, cfg.m, cfg.cap)?;
    let layout = XLayout::of(net);
    let mut points = Vec::new();
    let mut records = Vec::with_capacity(boxes.len());
    for vbox in boxes {
        let pr = probe(net, &adm, &vbox, &cfg.solver);
        let feasible = pr.status == SolveStatus::Optimal;
        let mut statuses = vec![pr.status];
        let mut wall = pr.wall_time_s;
        let first_point = points.len();
        let mut found = 0;
        if feasible {
            let probe_x = OperatingPoint::from_slice(layout, &pr.x);
            let out = explore_from(net, &adm, &vbox, cfg.t, &probe_x, &mut points, cfg);
            found = out.found.len();
            statuses.extend(out.statuses);
            wall += out.wall_time_s;
        }
        records.push(PartitionRecord { vbox, feasible, first_point, found, statuses, wall_time_s: wall });
    }
    Ok(ExhaustiveSet { points, records })
}
