//! Sequential max-distance data collection: grow an archive of feasible
//! operating points by repeatedly maximizing an archive-distance objective
//! subject to the full network constraints, starting each solve from a
//! slightly perturbed copy of the latest point.
//!
//! Solves that do not finish (any non-optimal status, or an optimal answer
//! that fails independent residual certification) are "DNF": under the
//! skip-and-perturb policy the step retries once from a fresh perturbation
//! and then records the miss without appending; under the abort policy the
//! run stops there.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acpf::{OperatingPoint, XLayout};
use crate::case_model::{build_admittance, Admittance, AdmittanceError, Network};
use crate::nlp_solver::{SolveStatus, SolverOpts};
use crate::objective_catalog::{
    evaluate, make_objective, Catalog, ObjectiveSpec, Provenance, SolutionLibrary,
};
use crate::opf_problem::{certify, find_feasible_point, solve_opf};
use crate::scalar::{real, Scalar};

/// Residual certification threshold every archived point must meet.
pub const CERT_TOL: f64 = 1e-6;

/// What to do when a step's solve does not finish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DnfPolicy {
    /// Retry once from a fresh perturbed start, then log the miss and move on.
    SkipAndPerturb,
    /// Stop the run and surface the solver status.
    Abort,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollectorConfig<F> {
    /// Catalog id of the objective to maximize.
    pub objective: String,
    /// Target library size including the seed.
    pub n_points: usize,
    pub dnf_policy: DnfPolicy,
    /// Uniform half-width added to v and theta of the warm start.
    pub perturbation: F,
    pub seed: u64,
    pub solver: SolverOpts<F>,
    /// Stamped into every entry's provenance (replays reuse the original).
    pub timestamp: String,
}

impl<F: Scalar> CollectorConfig<F> {
    pub fn new(objective: &str, n_points: usize, seed: u64) -> Self {
        CollectorConfig {
            objective: objective.to_string(),
            n_points,
            dnf_policy: DnfPolicy::SkipAndPerturb,
            perturbation: real(1e-2),
            seed,
            solver: SolverOpts::default(),
            timestamp: "1970-01-01T00:00:00Z".to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("objective id {0:?} is not in the catalog")]
    UnknownObjective(String),
    #[error("config invalid: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Network(#[from] AdmittanceError),
    #[error("no feasible seed point: solver status {0:?}")]
    SeedInfeasible(SolveStatus),
    #[error("aborted at iteration {iteration}: solver status {status:?}")]
    Aborted { iteration: usize, status: SolveStatus },
}

/// Outcome of one collection step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord<F> {
    /// 1-based step number (the seed is iteration 0).
    pub iteration: usize,
    /// Solver status of each attempt, in order.
    pub statuses: Vec<SolveStatus>,
    pub appended: bool,
    /// Residual violation of the accepted point, or of the last attempt.
    pub violation: F,
    pub wall_time_s: f64,
}

/// A finished collection: the library plus per-step bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollectRun<F> {
    pub library: SolutionLibrary<F>,
    pub steps: Vec<StepRecord<F>>,
}

impl<F> CollectRun<F> {
    pub fn dnf_count(&self) -> usize {
        self.steps.iter().filter(|s| !s.appended).count()
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn attempt_seed(seed: u64, iteration: usize, attempt: usize) -> u64 {
    splitmix64(splitmix64(seed.wrapping_add(iteration as u64)).wrapping_add(attempt as u64))
}

/// Copy of `last` with uniform noise on voltages and angles only; dispatch
/// carries over unchanged. Draws are made in f64 so the stream is identical
/// across scalar types.
pub(crate) fn perturbed_start<F: Scalar>(
    last: &OperatingPoint<F>,
    scale: F,
    seed: u64,
) -> OperatingPoint<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut op = last.clone();
    for v in &mut op.v {
        *v += scale * real::<F>(rng.gen_range(-1.0..=1.0));
    }
    for t in &mut op.theta {
        *t += scale * real::<F>(rng.gen_range(-1.0..=1.0));
    }
    op
}

/// Library containing only the objective-independent seed: a feasibility
/// solve from the flat start (bound midpoints, zero angles).
pub fn seed_point<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    cfg: &CollectorConfig<F>,
) -> Result<SolutionLibrary<F>, CollectError> {
    let start = OperatingPoint::flat_start(net);
    let res = find_feasible_point(net, adm, None, &start, &cfg.solver);
    if res.status != SolveStatus::Optimal {
        return Err(CollectError::SeedInfeasible(res.status));
    }
    let layout = XLayout::of(net);
    let op = OperatingPoint::from_slice(layout, &res.x);
    if certify(net, adm, &op) > real(CERT_TOL) {
        return Err(CollectError::SeedInfeasible(SolveStatus::NumericalFailure));
    }
    let mut lib = SolutionLibrary::new();
    lib.push(
        op,
        Provenance {
            objective: cfg.objective.clone(),
            iteration: 0,
            status: SolveStatus::Optimal,
            objective_value: F::zero(),
            timestamp: cfg.timestamp.clone(),
        },
    );
    Ok(lib)
}

/// One iteration: maximize the objective against the current library from a
/// perturbed warm start. Appends on certified success; otherwise applies the
/// DNF policy. Returns the step record.
pub fn step<F: Scalar>(
    net: &Network<F>,
    adm: &Admittance<F>,
    spec: &ObjectiveSpec,
    lib: &mut SolutionLibrary<F>,
    cfg: &CollectorConfig<F>,
    iteration: usize,
) -> Result<StepRecord<F>, CollectError> {
    assert!(!lib.is_empty(), "step requires a seeded library");
    let layout = XLayout::of(net);
    let last = lib.entries.last().unwrap().point.clone();
    let archive = lib.snapshot();

    let attempts = match cfg.dnf_policy {
        DnfPolicy::SkipAndPerturb => 2,
        DnfPolicy::Abort => 1,
    };
    let mut statuses = Vec::new();
    let mut violation = F::infinity();
    let mut wall = 0.0;
    for attempt in 0..attempts {
        let start = perturbed_start(
            &last,
            cfg.perturbation,
            attempt_seed(cfg.seed, iteration, attempt),
        );
        let objective = make_objective(spec, layout, archive.clone());
        let res = solve_opf(net, adm, None, objective, &start, &cfg.solver);
        wall += res.wall_time_s;
        let mut status = res.status;
        if status == SolveStatus::Optimal {
            let op = OperatingPoint::from_slice(layout, &res.x);
            let cert = certify(net, adm, &op);
            violation = cert;
            if cert <= real(CERT_TOL) {
                statuses.push(status);
                let value = evaluate(spec, layout, &res.x, &archive);
                lib.push(
                    op,
                    Provenance {
                        objective: cfg.objective.clone(),
                        iteration,
                        status,
                        objective_value: value,
                        timestamp: cfg.timestamp.clone(),
                    },
                );
                return Ok(StepRecord {
                    iteration,
                    statuses,
                    appended: true,
                    violation: cert,
                    wall_time_s: wall,
                });
            }
            status = SolveStatus::NumericalFailure;
        } else {
            violation = res.violation;
        }
        statuses.push(status);
        if cfg.dnf_policy == DnfPolicy::Abort {
            return Err(CollectError::Aborted { iteration, status });
        }
    }
    Ok(StepRecord { iteration, statuses, appended: false, violation, wall_time_s: wall })
}

/// Run the full collection: seed, then `n_points - 1` steps. The library
/// ends with at most `n_points` entries — exactly that many when no step
/// records a DNF.
pub fn collect<F: Scalar>(
    net: &Network<F>,
    cat: &Catalog,
    cfg: &CollectorConfig<F>,
) -> Result<CollectRun<F>, CollectError> {
    if cfg.n_points < 1 {
        return Err(CollectError::BadConfig("n_points must be at least 1".into()));
    }
    if cfg.perturbation < F::zero() {
        return Err(CollectError::BadConfig("perturbation must be nonnegative".into()));
    }
    let spec = cat
        .get(&cfg.objective)
        .ok_or_else(|| CollectError::UnknownObjective(cfg.objective.clone()))?;
    let adm = build_admittance(net)?;
    let mut lib = seed_point(net, &adm, cfg)?;
    let mut steps = Vec::new();
    for iteration in 1..cfg.n_points {
        steps.push(step(net, &adm, spec, &mut lib, cfg, iteration)?);
    }
    Ok(CollectRun { library: lib, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_model::parse_case;

    fn three_bus() -> Network<f64> {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/pglib_opf_case3_lmbd.m"
        ))
        .unwrap();
        parse_case(&text).unwrap()
    }

    #[test]
    fn seed_is_feasible_and_deterministic() {
        let net = three_bus();
        let adm = build_admittance(&net).unwrap();
        let cfg = CollectorConfig::<f64>::new("f36", 1, 11);
        let lib = seed_point(&net, &adm, &cfg).unwrap();
        assert_eq!(lib.len(), 1);
        assert!(certify(&net, &adm, &lib.entries[0].point) <= CERT_TOL);
        assert_eq!(lib.entries[0].provenance.iteration, 0);
        assert_eq!(lib.entries[0].provenance.objective_value, 0.0);
        let again = seed_point(&net, &adm, &cfg).unwrap();
        assert_eq!(again, lib);
    }

    #[test]
    fn seed_on_impossible_bounds_reports_infeasible() {
        let mut net = three_bus();
        for b in &mut net.buses {
            b.v_min = 1.2;
            b.v_max = 1.1;
        }
        let adm = build_admittance(&net).unwrap();
        let cfg = CollectorConfig::<f64>::new("f36", 1, 11);
        match seed_point(&net, &adm, &cfg) {
            Err(CollectError::SeedInfeasible(_)) => {}
            other => panic!("expected seed infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn one_step_moves_away_from_seed() {
        let net = three_bus();
        let adm = build_admittance(&net).unwrap();
        let cat = Catalog::standard();
        let cfg = CollectorConfig::<f64>::new("f36", 2, 11);
        let mut lib = seed_point(&net, &adm, &cfg).unwrap();
        let rec = step(&net, &adm, cat.get("f36").unwrap(), &mut lib, &cfg, 1).unwrap();
        assert!(rec.appended, "statuses {:?}", rec.statuses);
        assert_eq!(lib.len(), 2);
        let a = &lib.entries[0].point;
        let b = &lib.entries[1].point;
        let mut d2 = 0.0;
        for g in 0..a.p_gen.len() {
            d2 += (a.p_gen[g] - b.p_gen[g]).powi(2) + (a.q_gen[g] - b.q_gen[g]).powi(2);
        }
        assert!(d2.sqrt() > 1e-4, "PQ distance {}", d2.sqrt());
        assert!(certify(&net, &adm, b) <= CERT_TOL);
    }

    #[test]
    fn n_one_returns_seed_only() {
        let net = three_bus();
        let cat = Catalog::standard();
        let cfg = CollectorConfig::<f64>::new("f36", 1, 3);
        let run = collect(&net, &cat, &cfg).unwrap();
        assert_eq!(run.library.len(), 1);
        assert!(run.steps.is_empty());
    }

    #[test]
    fn collect_ten_points_all_feasible_and_distinct() {
        let net = three_bus();
        let adm = build_admittance(&net).unwrap();
        let cat = Catalog::standard();
        let cfg = CollectorConfig::<f64>::new("f36", 10, 7);
        let run = collect(&net, &cat, &cfg).unwrap();
        assert!(run.library.len() <= 10);
        assert_eq!(run.library.len() + run.dnf_count(), 10);
        for e in &run.library.entries {
            assert!(certify(&net, &adm, &e.point) <= CERT_TOL);
        }
        let pts = run.library.snapshot();
        for i in 0..pts.len() {
            for j in 0..i {
                let mut d2 = 0.0;
                for g in 0..pts[i].p_gen.len() {
                    d2 += (pts[i].p_gen[g] - pts[j].p_gen[g]).powi(2)
                        + (pts[i].q_gen[g] - pts[j].q_gen[g]).powi(2);
                }
                assert!(d2 > 0.0, "points {i} and {j} coincide in PQ");
            }
        }
    }

    #[test]
    fn recorded_objective_matches_archive_evaluation() {
        let net = three_bus();
        let cat = Catalog::standard();
        let spec = cat.get("f36").unwrap();
        let layout = XLayout::of(&net);
        let cfg = CollectorConfig::<f64>::new("f36", 5, 21);
        let run = collect(&net, &cat, &cfg).unwrap();
        let pts = run.library.snapshot();
        for (k, e) in run.library.entries.iter().enumerate().skip(1) {
            let value = evaluate(spec, layout, &e.point.to_vec(), &pts[..k]);
            assert!(
                (value - e.provenance.objective_value).abs() <= 1e-9,
                "entry {k}: recorded {} vs evaluated {value}",
                e.provenance.objective_value
            );
        }
    }

    #[test]
    fn same_config_twice_is_bit_identical() {
        let net = three_bus();
        let cat = Catalog::standard();
        let cfg = CollectorConfig::<f64>::new("f36", 4, 99);
        let a = collect(&net, &cat, &cfg).unwrap();
        let b = collect(&net, &cat, &cfg).unwrap();
        assert_eq!(a.library, b.library);
    }

    #[test]
    fn unknown_objective_is_rejected() {
        let net = three_bus();
        let cat = Catalog::standard();
        let cfg = CollectorConfig::<f64>::new("nope", 2, 1);
        match collect(&net, &cat, &cfg) {
            Err(CollectError::UnknownObjective(id)) => assert_eq!(id, "nope"),
            other => panic!("expected unknown objective, got {other:?}"),
        }
    }

    #[test]
    fn zero_perturbation_start_does_not_produce_nan() {
        let net = three_bus();
        let adm = build_admittance(&net).unwrap();
        let cat = Catalog::standard();
        let mut cfg = CollectorConfig::<f64>::new("f36", 2, 5);
        cfg.perturbation = 0.0;
        let mut lib = seed_point(&net, &adm, &cfg).unwrap();
        let rec = step(&net, &adm, cat.get("f36").unwrap(), &mut lib, &cfg, 1);
        let rec = rec.expect("skip policy never errors");
        assert!(rec.violation.is_finite() || !rec.appended);
        for e in &lib.entries {
            for &v in e.point.v.iter().chain(&e.point.theta) {
                assert!(v.is_finite());
            }
        }
    }
}
