//! Polar AC power-flow quantities and the full constraint system built on
//! them: nodal injections, branch flows, residual evaluation with labeled
//! constraints, and sparse analytic Jacobians.
//!
//! Residual orientation follows the usual mismatch convention
//! `injection(v, theta) - (generation - load)`, so the partial of a nodal
//! balance row with respect to a generator dispatch variable is -1.

use serde::{Deserialize, Serialize};

use crate::case_model::{Admittance, Network};
use crate::linalg::Triplets;
use crate::scalar::{real, Scalar};

/// One feasible-space sample: voltage magnitudes and angles per bus,
/// dispatch per generator, all per-unit/radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint<F> {
    pub v: Vec<F>,
    pub theta: Vec<F>,
    pub p_gen: Vec<F>,
    pub q_gen: Vec<F>,
}

/// Flat decision-vector layout `[v | theta | p_gen | q_gen]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XLayout {
    pub n: usize,
    pub ng: usize,
}

impl XLayout {
    pub fn of<F: Scalar>(net: &Network<F>) -> Self {
        XLayout { n: net.n_buses(), ng: net.n_gens() }
    }
    pub fn nx(&self) -> usize {
        2 * self.n + 2 * self.ng
    }
    pub fn v(&self, i: usize) -> usize {
        i
    }
    pub fn th(&self, i: usize) -> usize {
        self.n + i
    }
    pub fn pg(&self, g: usize) -> usize {
        2 * self.n + g
    }
    pub fn qg(&self, g: usize) -> usize {
        2 * self.n + self.ng + g
    }
}

impl<F: Scalar> OperatingPoint<F> {
    pub fn to_vec(&self) -> Vec<F> {
        let mut x = Vec::with_capacity(2 * self.v.len() + 2 * self.p_gen.len());
        x.extend_from_slice(&self.v);
        x.extend_from_slice(&self.theta);
        x.extend_from_slice(&self.p_gen);
        x.extend_from_slice(&self.q_gen);
        x
    }

    pub fn from_slice(layout: XLayout, x: &[F]) -> Self {
        assert_eq!(x.len(), layout.nx());
        let (n, ng) = (layout.n, layout.ng);
        OperatingPoint {
            v: x[..n].to_vec(),
            theta: x[n..2 * n].to_vec(),
            p_gen: x[2 * n..2 * n + ng].to_vec(),
            q_gen: x[2 * n + ng..].to_vec(),
        }
    }

    /// Midpoint voltages and dispatch, flat angles.
    pub fn flat_start(net: &Network<F>) -> Self {
        let half = real::<F>(0.5);
        OperatingPoint {
            v: net.buses.iter().map(|b| (b.v_min + b.v_max) * half).collect(),
            theta: vec![F::zero(); net.n_buses()],
            p_gen: net.gens.iter().map(|g| (g.p_min + g.p_max) * half).collect(),
            q_gen: net.gens.iter().map(|g| (g.q_min + g.q_max) * half).collect(),
        }
    }
}

/// Net injections (p_i, q_i) at every bus:
/// p_i = v_i sum_k v_k (G_ik cos th_ik + B_ik sin th_ik),
/// q_i = v_i sum_k v_k (G_ik sin th_ik - B_ik cos th_ik), k over neighbors+self.
pub fn injections<F: Scalar>(adm: &Admittance<F>, v: &[F], theta: &[F]) -> (Vec<F>, Vec<F>) {
    let n = adm.n;
    let mut p = vec![F::zero(); n];
    let mut q = vec![F::zero(); n];
    for i in 0..n {
        let mut pi = F::zero();
        let mut qi = F::zero();
        for e in &adm.rows[i] {
            let th = theta[i] - theta[e.bus];
            let (s, c) = (th.sin(), th.cos());
            pi += v[e.bus] * (e.g * c + e.b * s);
            qi += v[e.bus] * (e.g * s - e.b * c);
        }
        p[i] = v[i] * pi;
        q[i] = v[i] * qi;
    }
    (p, q)
}

/// Power entering a branch at each end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchFlow<F> {
    pub p_from: F,
    pub q_from: F,
    pub p_to: F,
    pub q_to: F,
}

pub fn branch_flows<F: Scalar>(adm: &Admittance<F>, v: &[F], theta: &[F]) -> Vec<BranchFlow<F>> {
    adm.branches
        .iter()
        .map(|ba| {
            let (vf, vt) = (v[ba.from], v[ba.to]);
            let d = theta[ba.from] - theta[ba.to];
            let (s, c) = (d.sin(), d.cos());
            BranchFlow {
                p_from: vf * vf * ba.g_ff + vf * vt * (ba.g_ft * c + ba.b_ft * s),
                q_from: -(vf * vf * ba.b_ff) + vf * vt * (ba.g_ft * s - ba.b_ft * c),
                p_to: vt * vt * ba.g_tt + vt * vf * (ba.g_tf * c - ba.b_tf * s),
                q_to: -(vt * vt * ba.b_tt) - vt * vf * (ba.g_tf * s + ba.b_tf * c),
            }
        })
        .collect()
}

/// Which scalar constraint a residual or slack belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintId {
    PBalance(usize),
    QBalance(usize),
    SlackAngle,
    VLower(usize),
    VUpper(usize),
    PgLower(usize),
    PgUpper(usize),
    QgLower(usize),
    QgUpper(usize),
    AngleLower(usize),
    AngleUpper(usize),
    ThermalFrom(usize),
    ThermalTo(usize),
}

/// Full constraint evaluation at a point. Equalities should be zero;
/// inequality slacks should be non-negative (negative = violated by that
/// amount). Thermal slacks are relative: (cap^2 - s^2) / cap^2, so every row
/// sits on a comparable O(1) scale regardless of the line rating.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport<F> {
    pub equalities: Vec<(ConstraintId, F)>,
    pub slacks: Vec<(ConstraintId, F)>,
    pub max_violation: F,
}

pub fn residuals<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    op: &OperatingPoint<F>,
) -> ResidualReport<F> {
    let n = net.n_buses();
    let (p, q) = injections(adm, &op.v, &op.theta);

    let mut p_bus = vec![F::zero(); n];
    let mut q_bus = vec![F::zero(); n];
    for (g, gen) in net.gens.iter().enumerate() {
        p_bus[gen.bus] += op.p_gen[g];
        q_bus[gen.bus] += op.q_gen[g];
    }

    let mut equalities = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        equalities.push((ConstraintId::PBalance(i), p[i] - (p_bus[i] - net.buses[i].p_load)));
    }
    for i in 0..n {
        equalities.push((ConstraintId::QBalance(i), q[i] - (q_bus[i] - net.buses[i].q_load)));
    }
    equalities.push((ConstraintId::SlackAngle, op.theta[net.slack_bus]));

    let mut slacks = Vec::new();
    for (i, bus) in net.buses.iter().enumerate() {
        slacks.push((ConstraintId::VLower(i), op.v[i] - bus.v_min));
        slacks.push((ConstraintId::VUpper(i), bus.v_max - op.v[i]));
    }
    for (g, gen) in net.gens.iter().enumerate() {
        slacks.push((ConstraintId::PgLower(g), op.p_gen[g] - gen.p_min));
        slacks.push((ConstraintId::PgUpper(g), gen.p_max - op.p_gen[g]));
        slacks.push((ConstraintId::QgLower(g), op.q_gen[g] - gen.q_min));
        slacks.push((ConstraintId::QgUpper(g), gen.q_max - op.q_gen[g]));
    }
    let flows = branch_flows(adm, &op.v, &op.theta);
    for (bi, br) in net.branches.iter().enumerate() {
        let d = op.theta[br.from] - op.theta[br.to];
        slacks.push((ConstraintId::AngleLower(bi), d + br.angle_diff_max));
        slacks.push((ConstraintId::AngleUpper(bi), br.angle_diff_max - d));
        if br.s_max > F::zero() {
            let cap = br.s_max * br.s_max;
            let f = &flows[bi];
            slacks.push((
                ConstraintId::ThermalFrom(bi),
                (cap - (f.p_from * f.p_from + f.q_from * f.q_from)) / cap,
            ));
            slacks.push((
                ConstraintId::ThermalTo(bi),
                (cap - (f.p_to * f.p_to + f.q_to * f.q_to)) / cap,
            ));
        }
    }

    let mut worst = F::zero();
    for (_, r) in &equalities {
        worst = worst.max(r.abs());
    }
    for (_, s) in &slacks {
        worst = worst.max(-*s);
    }
    ResidualReport { equalities, slacks, max_violation: worst }
}

/// Jacobian of the nodal injections w.r.t. (v, theta), as triplets into the
/// full x-layout. Entries exist only for neighbor pairs: the sparsity is
/// exactly the admittance sparsity.
fn injection_jacobian<F: Scalar>(
    adm: &Admittance<F>,
    layout: XLayout,
    v: &[F],
    theta: &[F],
    p_rows: &mut Triplets<F>,
    q_rows: &mut Triplets<F>,
    row_of: impl Fn(usize) -> usize,
) {
    let n = adm.n;
    for i in 0..n {
        let mut dp_dvi = F::zero();
        let mut dq_dvi = F::zero();
        let mut dp_dthi = F::zero();
        let mut dq_dthi = F::zero();
        let r = row_of(i);
        for e in &adm.rows[i] {
            let th = theta[i] - theta[e.bus];
            let (s, c) = (th.sin(), th.cos());
            let a = e.g * c + e.b * s; // d p-term / d v_k
            let b = e.g * s - e.b * c; // d q-term / d v_k
            dp_dvi += v[e.bus] * a;
            dq_dvi += v[e.bus] * b;
            if e.bus == i {
                dp_dvi += v[i] * a; // a_ii = G_ii
                dq_dvi += v[i] * b; // b_ii = -B_ii
            } else {
                p_rows.push(r, layout.v(e.bus), v[i] * a);
                q_rows.push(r, layout.v(e.bus), v[i] * b);
                let pk = v[i] * v[e.bus] * b;
                let qk = v[i] * v[e.bus] * a;
                p_rows.push(r, layout.th(e.bus), pk);
                q_rows.push(r, layout.th(e.bus), -qk);
                dp_dthi -= pk;
                dq_dthi += qk;
            }
        }
        p_rows.push(r, layout.v(i), dp_dvi);
        q_rows.push(r, layout.v(i), dq_dvi);
        p_rows.push(r, layout.th(i), dp_dthi);
        q_rows.push(r, layout.th(i), dq_dthi);
    }
}

/// Rows: p-balance per bus, q-balance per bus, slack angle. Columns: x-layout.
pub fn equality_jacobian<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    op: &OperatingPoint<F>,
) -> Triplets<F> {
    let layout = XLayout::of(net);
    let n = layout.n;
    let mut jac = Triplets::new(2 * n + 1, layout.nx());
    {
        // Injection parts of the p rows (rows i) and q rows (rows n+i).
        let mut p_part = Triplets::new(2 * n + 1, layout.nx());
        let mut q_part = Triplets::new(2 * n + 1, layout.nx());
        injection_jacobian(adm, layout, &op.v, &op.theta, &mut p_part, &mut q_part, |i| i);
        jac.entries.extend(p_part.entries);
        for (r, c, val) in q_part.entries {
            jac.push(r + n, c, val);
        }
    }
    for (g, gen) in net.gens.iter().enumerate() {
        jac.push(gen.bus, layout.pg(g), -F::one());
        jac.push(n + gen.bus, layout.qg(g), -F::one());
    }
    jac.push(2 * n, layout.th(net.slack_bus), F::one());
    jac
}

/// The non-box inequality rows (angle difference and thermal limits) in
/// solver orientation h(x) <= 0, with their Jacobian and labels.
pub struct IneqSystem<F> {
    pub ids: Vec<ConstraintId>,
    pub values: Vec<F>,
    pub jacobian: Triplets<F>,
}

/// Enumerates the non-box inequality rows of a network, fixing row order.
pub fn ineq_ids<F: Scalar>(net: &Network<F>) -> Vec<ConstraintId> {
    let mut ids = Vec::new();
    for (bi, br) in net.branches.iter().enumerate() {
        ids.push(ConstraintId::AngleLower(bi));
        ids.push(ConstraintId::AngleUpper(bi));
        if br.s_max > F::zero() {
            ids.push(ConstraintId::ThermalFrom(bi));
            ids.push(ConstraintId::ThermalTo(bi));
        }
    }
    ids
}

pub fn ineq_system<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    op: &OperatingPoint<F>,
    ids: &[ConstraintId],
) -> IneqSystem<F> {
    let layout = XLayout::of(net);
    let flows = branch_flows(adm, &op.v, &op.theta);
    let mut values = Vec::with_capacity(ids.len());
    let mut jac = Triplets::new(ids.len(), layout.nx());

    for (row, id) in ids.iter().enumerate() {
        match *id {
            ConstraintId::AngleLower(bi) => {
                let br = &net.branches[bi];
                let d = op.theta[br.from] - op.theta[br.to];
                values.push(-(d + br.angle_diff_max));
                jac.push(row, layout.th(br.from), -F::one());
                jac.push(row, layout.th(br.to), F::one());
            }
            ConstraintId::AngleUpper(bi) => {
                let br = &net.branches[bi];
                let d = op.theta[br.from] - op.theta[br.to];
                values.push(d - br.angle_diff_max);
                jac.push(row, layout.th(br.from), F::one());
                jac.push(row, layout.th(br.to), -F::one());
            }
            ConstraintId::ThermalFrom(bi) => {
                let br = &net.branches[bi];
                let ba = &adm.branches[bi];
                let f = &flows[bi];
                let cap = br.s_max * br.s_max;
                values.push((f.p_from * f.p_from + f.q_from * f.q_from - cap) / cap);
                let (vf, vt) = (op.v[ba.from], op.v[ba.to]);
                let d = op.theta[ba.from] - op.theta[ba.to];
                let (s, c) = (d.sin(), d.cos());
                let a = ba.g_ft * c + ba.b_ft * s;
                let b = ba.g_ft * s - ba.b_ft * c;
                let two = F::one() + F::one();
                // p_from = vf^2 g_ff + vf vt a ; q_from = -vf^2 b_ff + vf vt b
                let dp = [two * vf * ba.g_ff + vt * a, vf * a, -(vf * vt * b), vf * vt * b];
                let dq = [-(two * vf * ba.b_ff) + vt * b, vf * b, vf * vt * a, -(vf * vt * a)];
                let cols = [layout.v(ba.from), layout.v(ba.to), layout.th(ba.from), layout.th(ba.to)];
                for k in 0..4 {
                    jac.push(row, cols[k], two * (f.p_from * dp[k] + f.q_from * dq[k]) / cap);
                }
            }
            ConstraintId::ThermalTo(bi) => {
                let br = &net.branches[bi];
                let ba = &adm.branches[bi];
                let f = &flows[bi];
                let cap = br.s_max * br.s_max;
                values.push((f.p_to * f.p_to + f.q_to * f.q_to - cap) / cap);
                let (vf, vt) = (op.v[ba.from], op.v[ba.to]);
                let d = op.theta[ba.from] - op.theta[ba.to];
                let (s, c) = (d.sin(), d.cos());
                // Seen from the t end the angle is -d:
                // p_to = vt^2 g_tt + vt vf (g_tf cos d - b_tf sin d)
                // q_to = -vt^2 b_tt - vt vf (g_tf sin d + b_tf cos d)
                let a = ba.g_tf * c - ba.b_tf * s;
                let b = -(ba.g_tf * s + ba.b_tf * c);
                let two = F::one() + F::one();
                let da_dd = -(ba.g_tf * s) - ba.b_tf * c; // d a / d d
                let db_dd = -(ba.g_tf * c) + ba.b_tf * s; // d b / d d
                let dp = [vt * a, two * vt * ba.g_tt + vf * a, vt * vf * da_dd, -(vt * vf * da_dd)];
                let dq = [vt * b, -(two * vt * ba.b_tt) + vf * b, vt * vf * db_dd, -(vt * vf * db_dd)];
                let cols = [layout.v(ba.from), layout.v(ba.to), layout.th(ba.from), layout.th(ba.to)];
                for k in 0..4 {
                    jac.push(row, cols[k], two * (f.p_to * dp[k] + f.q_to * dq[k]) / cap);
                }
            }
            other => panic!("not an inequality row: {other:?}"),
        }
    }
    IneqSystem { ids: ids.to_vec(), values, jacobian: jac }
}

/// Equality residuals in solver orientation (same rows as `equality_jacobian`).
pub fn equality_values<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    op: &OperatingPoint<F>,
) -> Vec<F> {
    let n = net.n_buses();
    let (p, q) = injections(adm, &op.v, &op.theta);
    let mut p_bus = vec![F::zero(); n];
    let mut q_bus = vec![F::zero(); n];
    for (g, gen) in net.gens.iter().enumerate() {
        p_bus[gen.bus] += op.p_gen[g];
        q_bus[gen.bus] += op.q_gen[g];
    }
    let mut out = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        out.push(p[i] - (p_bus[i] - net.buses[i].p_load));
    }
    for i in 0..n {
        out.push(q[i] - (q_bus[i] - net.buses[i].q_load));
    }
    out.push(op.theta[net.slack_bus]);
    out
}
