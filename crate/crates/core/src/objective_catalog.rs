//! Catalog of smooth archive-distance objectives.
//!
//! Each objective scores how far a candidate operating point sits from every
//! point already stored in an archive. For one archive point and one variable
//! group the term is `transform(metric(x_group, archive_group))`; the total is
//! accumulated one term at a time, outer loop over archive points in insertion
//! order, inner loop over the groups in their stored order. That accumulation
//! order is part of the contract: runs must be reproducible bit for bit.

use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

use crate::acpf::{OperatingPoint, XLayout};
use crate::nlp_solver::{ObjFn, SolveStatus};
use crate::scalar::{real, Scalar};

/// Floor for log arguments: at or below it the log value is frozen at
/// `log(LOG_GUARD)` and the slope is zero, so coincident points cannot
/// produce infinities or unbounded gradients.
pub const LOG_GUARD: f64 = 1e-12;

/// Exponential arguments above this continue along the tangent line at the
/// clamp point (`b^50 * (1 + ln(b) * (s - 50))`), keeping value and slope
/// continuous while avoiding overflow.
pub const EXP_CLAMP: f64 = 50.0;

/// Distance between two equal-length coordinate slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// `sum_i d_i^2` with `d = a - b`.
    SquaredEuclidean,
    /// `sqrt(sum_i d_i^2)`.
    Euclidean,
    /// `sum_i |d_i|`.
    Manhattan,
    /// `sum_i |d_i|^3`.
    CubedDifference,
    /// `sqrt(sum_i |a_i^2 - b_i^2|)`.
    SquaredAbsDifference,
    /// Signed `max_i d_i`; the first index attaining the max carries the
    /// subgradient.
    MaxDifference,
    /// `1 - a.b / (|a| |b|)`; if either norm is (near) zero the score is 1
    /// with zero slope.
    Cosine,
}

/// Scalar map applied to each per-group metric value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    /// Natural log of `max(s, LOG_GUARD)`.
    LogE,
    Log10,
    Log2,
    /// `e^s`, tangent-extended above `EXP_CLAMP`.
    Exp,
    Exp10,
    Exp2,
}

/// Which block of the decision vector a metric compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarGroup {
    /// Active dispatch of every generator.
    PGen,
    /// Reactive dispatch of every generator.
    QGen,
    /// Voltage magnitude at every bus.
    VAll,
    /// Voltage angle at every bus.
    ThetaAll,
}

/// One catalog entry: a named transform-of-metric over a set of groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub id: String,
    pub metric: Metric,
    pub transform: Transform,
    /// Non-empty; evaluated in this stored order.
    pub groups: Vec<VarGroup>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CatalogError {
    #[error("objective id {0:?} is already registered")]
    DuplicateId(String),
    #[error("objective {0:?} selects no variable groups")]
    EmptyGroups(String),
}

/// Registry of objective specs with unique ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Catalog {
    entries: Vec<ObjectiveSpec>,
}

impl Catalog {
    pub fn empty() -> Self {
        Catalog { entries: Vec::new() }
    }

    /// The built-in catalog: six hand-picked log-family staples plus a
    /// generated sweep of metric/transform/group combinations.
    pub fn standard() -> Self {
        let mut cat = Catalog::empty();
        let pq = || vec![VarGroup::PGen, VarGroup::QGen];
        let v = || vec![VarGroup::VAll];
        let vth = || vec![VarGroup::VAll, VarGroup::ThetaAll];
        let pqv = || vec![VarGroup::PGen, VarGroup::QGen, VarGroup::VAll];
        let all = || {
            vec![VarGroup::VAll, VarGroup::ThetaAll, VarGroup::PGen, VarGroup::QGen]
        };
        use Metric::*;
        use Transform::*;
        let table: &[(&str, Metric, Transform, Vec<VarGroup>)] = &[
            ("f03", SquaredEuclidean, LogE, pq()),
            ("f18", Euclidean, Log10, pq()),
            ("f34", Euclidean, Log2, vth()),
            ("f36", Euclidean, LogE, all()),
            ("f37", Euclidean, LogE, pqv()),
            ("f38", Manhattan, LogE, pqv()),
            ("g01", SquaredEuclidean, Identity, pq()),
            ("g02", SquaredEuclidean, Log10, pq()),
            ("g03", SquaredEuclidean, Log2, pq()),
            ("g04", SquaredEuclidean, Exp, pq()),
            ("g05", SquaredEuclidean, Exp10, pq()),
            ("g06", SquaredEuclidean, Exp2, pq()),
            ("g07", CubedDifference, Identity, pq()),
            ("g08", CubedDifference, Exp, pq()),
            ("g09", Manhattan, LogE, pq()),
            ("g10", Manhattan, Exp, pq()),
            ("g11", SquaredAbsDifference, Identity, pq()),
            ("g12", SquaredAbsDifference, LogE, pq()),
            ("g13", SquaredAbsDifference, Log10, pq()),
            ("g14", SquaredAbsDifference, Exp, pq()),
            ("g15", SquaredAbsDifference, Exp10, pq()),
            ("g16", Euclidean, Identity, pq()),
            ("g17", Euclidean, LogE, pq()),
            ("g18", Euclidean, Log2, pq()),
            ("g19", Euclidean, Exp, pq()),
            ("g20", Euclidean, Exp10, pq()),
            ("g21", Euclidean, Exp2, pq()),
            ("g22", Cosine, Identity, pq()),
            ("g23", MaxDifference, LogE, pq()),
            ("g24", SquaredEuclidean, Identity, v()),
            ("g25", SquaredEuclidean, LogE, v()),
            ("g26", SquaredEuclidean, Exp, v()),
            ("g27", Euclidean, Identity, v()),
            ("g28", Euclidean, LogE, v()),
            ("g29", Euclidean, Exp, v()),
            ("g30", Manhattan, Identity, v()),
            ("g31", Manhattan, LogE, v()),
            ("g32", Euclidean, LogE, vth()),
            ("g33", Euclidean, Identity, vth()),
            ("g34", SquaredEuclidean, Exp, vth()),
            ("g35", Euclidean, Log10, all()),
            ("g36", Manhattan, Identity, pqv()),
        ];
        for (id, metric, transform, groups) in table {
            cat.register(ObjectiveSpec {
                id: (*id).to_string(),
                metric: *metric,
                transform: *transform,
                groups: groups.clone(),
            })
            .expect("built-in catalog must be well-formed");
        }
        cat
    }

    pub fn register(&mut self, spec: ObjectiveSpec) -> Result<(), CatalogError> {
        if spec.groups.is_empty() {
            return Err(CatalogError::EmptyGroups(spec.id));
        }
        if self.entries.iter().any(|e| e.id == spec.id) {
            return Err(CatalogError::DuplicateId(spec.id));
        }
        self.entries.push(spec);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ObjectiveSpec> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn entries(&self) -> &[ObjectiveSpec] {
        &self.entries
    }

    /// Entries whose transform is exponential-family.
    pub fn exp_family(&self) -> Vec<&ObjectiveSpec> {
        self.entries
            .iter()
            .filter(|e| {
                matches!(e.transform, Transform::Exp | Transform::Exp10 | Transform::Exp2)
            })
            .collect()
    }

    /// Pretty JSON listing of every entry (id, metric, transform, groups).
    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("specs serialize")
    }
}

/// Index range of a variable group inside the flat decision vector.
pub fn group_range(layout: XLayout, g: VarGroup) -> Range<usize> {
    match g {
        VarGroup::VAll => 0..layout.n,
        VarGroup::ThetaAll => layout.n..2 * layout.n,
        VarGroup::PGen => 2 * layout.n..2 * layout.n + layout.ng,
        VarGroup::QGen => 2 * layout.n + layout.ng..layout.nx(),
    }
}

/// The same group read out of a stored operating point.
pub fn group_slice<F>(op: &OperatingPoint<F>, g: VarGroup) -> &[F] {
    match g {
        VarGroup::VAll => &op.v,
        VarGroup::ThetaAll => &op.theta,
        VarGroup::PGen => &op.p_gen,
        VarGroup::QGen => &op.q_gen,
    }
}

fn sign0<F: Scalar>(d: F) -> F {
    if d > F::zero() {
        F::one()
    } else if d < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

/// Metric value for one group pair; `a` is the candidate slice, `b` the
/// archived slice. Sums run in index order with a single accumulator.
pub fn metric_value<F: Scalar>(m: Metric, a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    match m {
        Metric::SquaredEuclidean => {
            let mut s = F::zero();
            for i in 0..a.len() {
                let d = a[i] - b[i];
                s += d * d;
            }
            s
        }
        Metric::Euclidean => metric_value(Metric::SquaredEuclidean, a, b).sqrt(),
        Metric::Manhattan => {
            let mut s = F::zero();
            for i in 0..a.len() {
                s += (a[i] - b[i]).abs();
            }
            s
        }
        Metric::CubedDifference => {
            let mut s = F::zero();
            for i in 0..a.len() {
                let d = (a[i] - b[i]).abs();
                s += d * d * d;
            }
            s
        }
        Metric::SquaredAbsDifference => {
            let mut s = F::zero();
            for i in 0..a.len() {
                s += (a[i] * a[i] - b[i] * b[i]).abs();
            }
            s.sqrt()
        }
        Metric::MaxDifference => {
            let mut best = F::neg_infinity();
            for i in 0..a.len() {
                let d = a[i] - b[i];
                if d > best {
                    best = d;
                }
            }
            best
        }
        Metric::Cosine => {
            let mut ab = F::zero();
            let mut aa = F::zero();
            let mut bb = F::zero();
            for i in 0..a.len() {
                ab += a[i] * b[i];
                aa += a[i] * a[i];
                bb += b[i] * b[i];
            }
            let nn = aa.sqrt() * bb.sqrt();
            if nn <= real(LOG_GUARD) {
                F::one()
            } else {
                F::one() - ab / nn
            }
        }
    }
}

/// Accumulate `scale * d metric / d a_i` into `out` (same length as the
/// group). `scale` carries the transform derivative via the chain rule.
fn metric_grad_into<F: Scalar>(m: Metric, a: &[F], b: &[F], scale: F, out: &mut [F]) {
    match m {
        Metric::SquaredEuclidean => {
            let two = real::<F>(2.0);
            for i in 0..a.len() {
                out[i] += scale * two * (a[i] - b[i]);
            }
        }
        Metric::Euclidean => {
            let s = metric_value(Metric::Euclidean, a, b);
            if s > F::zero() {
                for i in 0..a.len() {
                    out[i] += scale * (a[i] - b[i]) / s;
                }
            }
        }
        Metric::Manhattan => {
            for i in 0..a.len() {
                out[i] += scale * sign0(a[i] - b[i]);
            }
        }
        Metric::CubedDifference => {
            let three = real::<F>(3.0);
            for i in 0..a.len() {
                let d = a[i] - b[i];
                out[i] += scale * three * d.abs() * d;
            }
        }
        Metric::SquaredAbsDifference => {
            let s = metric_value(Metric::SquaredAbsDifference, a, b);
            if s > F::zero() {
                for i in 0..a.len() {
                    out[i] += scale * sign0(a[i] * a[i] - b[i] * b[i]) * a[i] / s;
                }
            }
        }
        Metric::MaxDifference => {
            let mut best = F::neg_infinity();
            let mut arg = 0;
            for i in 0..a.len() {
                let d = a[i] - b[i];
                if d > best {
                    best = d;
                    arg = i;
                }
            }
            if !a.is_empty() {
                out[arg] += scale;
            }
        }
        Metric::Cosine => {
            let mut ab = F::zero();
            let mut aa = F::zero();
            let mut bb = F::zero();
            for i in 0..a.len() {
                ab += a[i] * b[i];
                aa += a[i] * a[i];
                bb += b[i] * b[i];
            }
            let na = aa.sqrt();
            let nb = bb.sqrt();
            if na * nb > real(LOG_GUARD) {
                for i in 0..a.len() {
                    out[i] += scale * (ab * a[i] / (na * na * na * nb) - b[i] / (na * nb));
                }
            }
        }
    }
}

fn base_ln<F: Scalar>(t: Transform) -> F {
    match t {
        Transform::Identity => F::one(),
        Transform::LogE | Transform::Exp => F::one(),
        Transform::Log10 | Transform::Exp10 => real::<F>(10.0).ln(),
        Transform::Log2 | Transform::Exp2 => real::<F>(2.0).ln(),
    }
}

/// Transform value with the log floor and exponential tangent extension.
pub fn transform_value<F: Scalar>(t: Transform, s: F) -> F {
    match t {
        Transform::Identity => s,
        Transform::LogE | Transform::Log10 | Transform::Log2 => {
            s.max(real(LOG_GUARD)).ln() / base_ln(t)
        }
        Transform::Exp | Transform::Exp10 | Transform::Exp2 => {
            let clamp = real::<F>(EXP_CLAMP);
            let ln_b = base_ln::<F>(t);
            if s <= clamp {
                (s * ln_b).exp()
            } else {
                (clamp * ln_b).exp() * (F::one() + ln_b * (s - clamp))
            }
        }
    }
}

/// Derivative of `transform_value` in `s`, zero where the log floor is
/// active, constant on the exponential tangent extension.
pub fn transform_deriv<F: Scalar>(t: Transform, s: F) -> F {
    match t {
        Transform::Identity => F::one(),
        Transform::LogE | Transform::Log10 | Transform::Log2 => {
            if s > real(LOG_GUARD) {
                F::one() / (s * base_ln(t))
            } else {
                F::zero()
            }
        }
        Transform::Exp | Transform::Exp10 | Transform::Exp2 => {
            let clamp = real::<F>(EXP_CLAMP);
            let ln_b = base_ln::<F>(t);
            if s <= clamp {
                ln_b * (s * ln_b).exp()
            } else {
                ln_b * (clamp * ln_b).exp()
            }
        }
    }
}

/// Objective value of `x` against the archive: outer loop over points in
/// order, inner loop over groups in stored order, `total += term` each time.
pub fn evaluate<F: Scalar>(
    spec: &ObjectiveSpec,
    layout: XLayout,
    x: &[F],
    archive: &[OperatingPoint<F>],
) -> F {
    debug_assert_eq!(x.len(), layout.nx());
    let mut total = F::zero();
    for op in archive {
        for &g in &spec.groups {
            let a = &x[group_range(layout, g)];
            let b = group_slice(op, g);
            total += transform_value(spec.transform, metric_value(spec.metric, a, b));
        }
    }
    total
}

/// Analytic gradient of [`evaluate`] in `x`. Groups outside `spec.groups`
/// keep exactly zero partials.
pub fn gradient<F: Scalar>(
    spec: &ObjectiveSpec,
    layout: XLayout,
    x: &[F],
    archive: &[OperatingPoint<F>],
) -> Vec<F> {
    debug_assert_eq!(x.len(), layout.nx());
    let mut grad = vec![F::zero(); layout.nx()];
    for op in archive {
        for &g in &spec.groups {
            let r = group_range(layout, g);
            let a = &x[r.clone()];
            let b = group_slice(op, g);
            let s = metric_value(spec.metric, a, b);
            let dt = transform_deriv(spec.transform, s);
            if dt != F::zero() {
                metric_grad_into(spec.metric, a, b, dt, &mut grad[r]);
            }
        }
    }
    grad
}

/// Box the objective (value + gradient) over a frozen archive snapshot for
/// the solver.
pub fn make_objective<F: Scalar>(
    spec: &ObjectiveSpec,
    layout: XLayout,
    archive: Vec<OperatingPoint<F>>,
) -> ObjFn<F> {
    let spec = spec.clone();
    Box::new(move |x| {
        (evaluate(&spec, layout, x, &archive), gradient(&spec, layout, x, &archive))
    })
}

/// Where an archived point came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance<F> {
    /// Objective id that was maximized to find this point ("seed" stage uses
    /// the configured id with iteration 0).
    pub objective: String,
    /// 0 for the seed, then 1, 2, ... in collection order.
    pub iteration: usize,
    pub status: SolveStatus,
    /// Objective value at acceptance, measured against the archive as it was
    /// before this point joined it (the seed records 0).
    pub objective_value: F,
    /// RFC 3339; copied from the owning run manifest so replays byte-match.
    pub timestamp: String,
}

/// One archived operating point plus its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry<F> {
    pub point: OperatingPoint<F>,
    pub provenance: Provenance<F>,
}

/// Ordered archive of certified operating points; entry 0 is the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionLibrary<F> {
    pub entries: Vec<LibraryEntry<F>>,
}

impl<F> Default for SolutionLibrary<F> {
    fn default() -> Self {
        SolutionLibrary { entries: Vec::new() }
    }
}

impl<F: Scalar> SolutionLibrary<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, point: OperatingPoint<F>, provenance: Provenance<F>) {
        self.entries.push(LibraryEntry { point, provenance });
    }

    /// Clone of the stored points, in order, for objective construction.
    pub fn snapshot(&self) -> Vec<OperatingPoint<F>> {
        self.entries.iter().map(|e| e.point.clone()).collect()
    }
}
