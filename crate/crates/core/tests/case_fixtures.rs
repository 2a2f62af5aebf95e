//! Parses the bundled 3-bus and 5-bus networks and checks structure,
//! per-unit conversion, and end-to-end feasibility solves against them.

use std::path::PathBuf;

use opfx::acpf::{OperatingPoint, XLayout};
use opfx::case_model::{build_admittance, parse_case, Network};
use opfx::nlp_solver::{SolveStatus, SolverOpts};
use opfx::opf_problem::{certify, find_feasible_point};

fn fixture(name: &str) -> Network<f64> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    parse_case(&text).expect("fixture parses")
}

#[test]
fn three_bus_structure() {
    let net = fixture("pglib_opf_case3_lmbd.m");
    assert_eq!(net.n_buses(), 3);
    assert_eq!(net.gens.len(), 3);
    assert_eq!(net.branches.len(), 3);
    assert_eq!(net.base_mva, 100.0);
    assert_eq!(net.slack_bus, 0);
    assert_eq!(opfx::case_model::validate(&net), vec![]);

    // Loads and limits arrive in per-unit.
    assert_eq!(net.buses[0].p_load, 1.1);
    assert_eq!(net.buses[0].q_load, 0.4);
    assert_eq!(net.buses[2].p_load, 0.95);
    assert_eq!(net.buses[2].q_load, 0.5);
    assert_eq!(net.buses[0].v_min, 0.9);
    assert_eq!(net.buses[0].v_max, 1.1);
    assert_eq!(net.gens[0].p_max, 20.0);
    assert_eq!(net.gens[2].p_max, 0.0);
    assert_eq!(net.gens[1].q_min, -10.0);
    assert_eq!(net.branches[1].s_max, 0.5);
    assert_eq!(net.branches[0].s_max, 90.0);

    // +/- 30 degrees becomes a symmetric radian bound.
    let thirty = 30.0f64.to_radians();
    for br in &net.branches {
        assert!((br.angle_diff_max - thirty).abs() < 1e-12);
    }

    // Every bus hosts a generator, so three distinct generator buses.
    assert_eq!(net.gen_buses(), vec![0, 1, 2]);
}

#[test]
fn five_bus_structure() {
    let net = fixture("pglib_opf_case5_pjm.m");
    assert_eq!(net.n_buses(), 5);
    assert_eq!(net.gens.len(), 5);
    assert_eq!(net.branches.len(), 6);
    assert_eq!(net.slack_bus, 3);
    assert_eq!(opfx::case_model::validate(&net), vec![]);

    assert_eq!(net.buses[1].p_load, 3.0);
    assert_eq!(net.buses[3].q_load, 1.3147);
    // Two units share bus 1, so four distinct generator buses.
    assert_eq!(net.gen_buses(), vec![0, 2, 3, 4]);
    assert_eq!(net.gens[1].bus, 0);
    assert_eq!(net.gens[1].p_max, 1.7);
    assert_eq!(net.gens[4].q_max, 4.5);
    assert_eq!(net.branches[5].s_max, 2.4);
}

#[test]
fn three_bus_feasible_point() {
    let net = fixture("pglib_opf_case3_lmbd.m");
    let adm = build_admittance(&net).unwrap();
    let start = OperatingPoint::flat_start(&net);
    let r = find_feasible_point(&net, &adm, None, &start, &SolverOpts::default());
    assert_eq!(r.status, SolveStatus::Optimal, "violation {}", r.violation);
    let op = OperatingPoint::from_slice(XLayout::of(&net), &r.x);
    assert!(certify(&net, &adm, &op) <= 1e-6);
}

#[test]
fn five_bus_feasible_point() {
    let net = fixture("pglib_opf_case5_pjm.m");
    let adm = build_admittance(&net).unwrap();
    let start = OperatingPoint::flat_start(&net);
    let r = find_feasible_point(&net, &adm, None, &start, &SolverOpts::default());
    assert_eq!(r.status, SolveStatus::Optimal, "violation {}", r.violation);
    let op = OperatingPoint::from_slice(XLayout::of(&net), &r.x);
    assert!(certify(&net, &adm, &op) <= 1e-6);
}

#[test]
fn feasibility_solves_are_bit_identical() {
    let net = fixture("pglib_opf_case3_lmbd.m");
    let adm = build_admittance(&net).unwrap();
    let start = OperatingPoint::flat_start(&net);
    let a = find_feasible_point(&net, &adm, None, &start, &SolverOpts::default());
    let b = find_feasible_point(&net, &adm, None, &start, &SolverOpts::default());
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.x), bits(&b.x));
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn inverted_voltage_bounds_are_infeasible() {
    let mut net = fixture("pglib_opf_case3_lmbd.m");
    for bus in &mut net.buses {
        bus.v_min = 1.2;
        bus.v_max = 0.9;
    }
    let adm = build_admittance(&net).unwrap();
    let start = OperatingPoint::flat_start(&net);
    let r = find_feasible_point(&net, &adm, None, &start, &SolverOpts::default());
    assert_eq!(r.status, SolveStatus::Infeasible);
}
