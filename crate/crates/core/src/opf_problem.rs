//! Assembles network steady-state feasibility into the solver's problem
//! shape: voltage and dispatch bounds on the flat vector [v | theta | pg |
//! qg], nodal-balance equality rows, angle-difference and thermal inequality
//! rows, and a pluggable objective.

use crate::acpf::{self, ineq_ids, OperatingPoint, XLayout};
use crate::case_model::{Admittance, Network};
use crate::nlp_solver::{self, ConsFn, ObjFn, ProblemDef, SolveResult, SolverOpts};
use crate::scalar::Scalar;

/// Per-bus voltage magnitude interval; intersected with the case bounds to
/// confine a solve to one cell of a voltage-space partition.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageBounds<F> {
    pub lo: Vec<F>,
    pub hi: Vec<F>,
}

/// Objective callback that leaves the solver searching for any feasible
/// point.
pub fn zero_objective<F: Scalar>(nx: usize) -> ObjFn<F> {
    Box::new(move |_: &[F]| (F::zero(), vec![F::zero(); nx]))
}

/// Builds the maximize-orientation program for one network: bounds from the
/// case (optionally narrowed by `vbounds`), balance equalities, branch
/// inequalities, and the given objective over the flat vector.
pub fn opf_problem<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    vbounds: Option<&VoltageBounds<F>>,
    objective: ObjFn<F>,
) -> ProblemDef<F> {
    let layout = XLayout::of(net);
    let nx = layout.nx();
    let n = net.n_buses();

    let mut lower = vec![F::neg_infinity(); nx];
    let mut upper = vec![F::infinity(); nx];
    for (i, bus) in net.buses.iter().enumerate() {
        let mut lo = bus.v_min;
        let mut hi = bus.v_max;
        if let Some(vb) = vbounds {
            assert_eq!(vb.lo.len(), n);
            assert_eq!(vb.hi.len(), n);
            lo = lo.max(vb.lo[i]);
            hi = hi.min(vb.hi[i]);
        }
        lower[layout.v(i)] = lo;
        upper[layout.v(i)] = hi;
    }
    for (g, gen) in net.gens.iter().enumerate() {
        lower[layout.pg(g)] = gen.p_min;
        upper[layout.pg(g)] = gen.p_max;
        lower[layout.qg(g)] = gen.q_min;
        upper[layout.qg(g)] = gen.q_max;
    }

    let eq_net = net.clone();
    let eq_adm = adm.clone();
    let eq: ConsFn<F> = Box::new(move |x: &[F]| {
        let op = OperatingPoint::from_slice(XLayout::of(&eq_net), x);
        (
            acpf::equality_values(&eq_net, &eq_adm, &op),
            acpf::equality_jacobian(&eq_net, &eq_adm, &op),
        )
    });

    let ids = ineq_ids(net);
    let n_ineq = ids.len();
    let iq_net = net.clone();
    let iq_adm = adm.clone();
    let ineq: ConsFn<F> = Box::new(move |x: &[F]| {
        let op = OperatingPoint::from_slice(XLayout::of(&iq_net), x);
        let sys = acpf::ineq_system(&iq_net, &iq_adm, &op, &ids);
        (sys.values, sys.jacobian)
    });

    let mut p = ProblemDef::new(nx, lower, upper, objective);
    p.n_eq = 2 * n + 1;
    p.eq = eq;
    p.n_ineq = n_ineq;
    p.ineq = ineq;
    p
}

/// Maximizes `objective` over the network's operating points.
pub fn solve_opf<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    vbounds: Option<&VoltageBounds<F>>,
    objective: ObjFn<F>,
    start: &OperatingPoint<F>,
    opts: &SolverOpts<F>,
) -> SolveResult<F> {
    let p = opf_problem(net, adm, vbounds, objective);
    nlp_solver::solve(&p, &start.to_vec(), opts)
}

/// Searches for any operating point satisfying all constraints.
pub fn find_feasible_point<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    vbounds: Option<&VoltageBounds<F>>,
    start: &OperatingPoint<F>,
    opts: &SolverOpts<F>,
) -> SolveResult<F> {
    let layout = XLayout::of(net);
    let p = opf_problem(net, adm, vbounds, zero_objective(layout.nx()));
    nlp_solver::find_feasible(&p, &start.to_vec(), opts)
}

/// Largest constraint violation at `op`, recomputed from the case data alone
/// (independent of anything the solver reported).
pub fn certify<F: Scalar>(net: &Network<F>, adm: &Admittance<F>, op: &OperatingPoint<F>) -> F {
    acpf::residuals(net, adm, op).max_violation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_model::{build_admittance, Branch, Bus, Gen};

    fn two_bus() -> Network<f64> {
        Network {
            name: "two_bus".into(),
            base_mva: 100.0,
            slack_bus: 0,
            buses: vec![
                Bus { id: 1, v_min: 0.9, v_max: 1.1, p_load: 0.0, q_load: 0.0, gs: 0.0, bs: 0.0 },
                Bus { id: 2, v_min: 0.9, v_max: 1.1, p_load: 0.5, q_load: 0.1, gs: 0.0, bs: 0.0 },
            ],
            gens: vec![Gen { bus: 0, p_min: 0.0, p_max: 2.0, q_min: -1.0, q_max: 1.0 }],
            branches: vec![Branch {
                from: 0,
                to: 1,
                r: 0.01,
                x: 0.1,
                b_charge: 0.0,
                tap: 1.0,
                shift: 0.0,
                s_max: 2.0,
                angle_diff_max: 0.5,
            }],
        }
    }

    #[test]
    fn bounds_land_in_layout_slots() {
        let net = two_bus();
        let adm = build_admittance(&net).unwrap();
        let p = opf_problem(&net, &adm, None, zero_objective(6));
        let layout = XLayout::of(&net);
        assert_eq!(p.n, 6);
        assert_eq!(p.lower[layout.v(0)], 0.9);
        assert_eq!(p.upper[layout.v(1)], 1.1);
        assert!(p.lower[layout.th(0)].is_infinite());
        assert!(p.upper[layout.th(1)].is_infinite());
        assert_eq!(p.lower[layout.pg(0)], 0.0);
        assert_eq!(p.upper[layout.pg(0)], 2.0);
        assert_eq!(p.lower[layout.qg(0)], -1.0);
        assert_eq!(p.upper[layout.qg(0)], 1.0);
        assert_eq!(p.n_eq, 5);
        assert_eq!(p.n_ineq, 4);
    }

    #[test]
    fn voltage_box_narrows_only_voltage_bounds() {
        let net = two_bus();
        let adm = build_admittance(&net).unwrap();
        let vbounds = VoltageBounds { lo: vec![0.95, 1.0], hi: vec![1.05, 1.2] };
        let p = opf_problem(&net, &adm, Some(&vbounds), zero_objective(6));
        let layout = XLayout::of(&net);
        assert_eq!(p.lower[layout.v(0)], 0.95);
        assert_eq!(p.upper[layout.v(0)], 1.05);
        assert_eq!(p.lower[layout.v(1)], 1.0);
        // The case upper bound wins where the box is looser.
        assert_eq!(p.upper[layout.v(1)], 1.1);
        assert_eq!(p.upper[layout.pg(0)], 2.0);
    }

    #[test]
    fn feasible_point_found_and_certified() {
        let net = two_bus();
        let adm = build_admittance(&net).unwrap();
        let start = OperatingPoint::flat_start(&net);
        let r = find_feasible_point(&net, &adm, None, &start, &SolverOpts::default());
        assert_eq!(r.status, crate::nlp_solver::SolveStatus::Optimal);
        let op = OperatingPoint::from_slice(XLayout::of(&net), &r.x);
        assert!(certify(&net, &adm, &op) <= 1e-6);
    }

    #[test]
    fn inverted_voltage_bounds_are_infeasible() {
        let mut net = two_bus();
        for bus in &mut net.buses {
            bus.v_min = 1.2;
            bus.v_max = 0.9;
        }
        let adm = build_admittance(&net).unwrap();
        let start = OperatingPoint::flat_start(&net);
        let r = find_feasible_point(&net, &adm, None, &start, &SolverOpts::default());
        assert_eq!(r.status, crate::nlp_solver::SolveStatus::Infeasible);
    }
}
