//! Primal-dual interior-point solver for smooth nonlinear programs.
//!
//! Problems are posed in maximize orientation over box-bounded variables,
//! with equality rows g(x) = 0 and inequality rows h(x) <= 0. Internally the
//! objective is negated and minimized. Finite bounds become extra inequality
//! rows (or equality rows when the two bounds coincide), every inequality row
//! gets a strictly positive slack z with multiplier mu, and each iteration
//! solves the condensed KKT system
//!
//! ```txt
//!     [ B + Jh' Z^-1 diag(mu) Jh   Jg' ] [ dx   ]   [ -N ]
//!     [ Jg                          0  ] [ dlam ] = [ -g ]
//!
//!     N  = Lx + Jh' Z^-1 (diag(mu) h + gamma e)
//!     dz = -h - z - Jh dx
//!     dmu = -mu + Z^-1 (gamma e - diag(mu) dz)
//! ```
//!
//! where B is a damped BFGS model of the Lagrangian Hessian. Steps obey a
//! fraction-to-boundary rule keeping (z, mu) positive; progress is driven by
//! the barrier weight gamma shrinking with measured complementarity, with no
//! merit-function line search. Infeasibility is reported either from an empty
//! variable box or from a restoration solve (least-squares constraint
//! violation over the box alone) that bottoms out away from zero.

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, lu_solve, norm2, norm_inf, Mat, Triplets};
use crate::scalar::{real, Scalar};

/// Objective callback: value and gradient at x (maximize orientation).
pub type ObjFn<F> = Box<dyn Fn(&[F]) -> (F, Vec<F>) + Send + Sync>;
/// Constraint callback: row values and Jacobian in triplet form at x.
pub type ConsFn<F> = Box<dyn Fn(&[F]) -> (Vec<F>, Triplets<F>) + Send + Sync>;

/// max f(x)  s.t.  g(x) = 0,  h(x) <= 0,  lower <= x <= upper.
pub struct ProblemDef<F: Scalar> {
    pub n: usize,
    pub objective: ObjFn<F>,
    pub n_eq: usize,
    pub eq: ConsFn<F>,
    pub n_ineq: usize,
    pub ineq: ConsFn<F>,
    pub lower: Vec<F>,
    pub upper: Vec<F>,
}

impl<F: Scalar> ProblemDef<F> {
    /// Box-bounded problem without functional rows; callers replace `eq` /
    /// `ineq` together with the matching row counts to add constraints.
    pub fn new(n: usize, lower: Vec<F>, upper: Vec<F>, objective: ObjFn<F>) -> Self {
        assert_eq!(lower.len(), n);
        assert_eq!(upper.len(), n);
        ProblemDef {
            n,
            objective,
            n_eq: 0,
            eq: empty_rows(n),
            n_ineq: 0,
            ineq: empty_rows(n),
            lower,
            upper,
        }
    }
}

/// Constraint callback producing no rows.
pub fn empty_rows<F: Scalar>(n: usize) -> ConsFn<F> {
    Box::new(move |_: &[F]| (Vec::new(), Triplets::new(0, n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// KKT conditions met and raw constraint violation within `feas_tol`.
    Optimal,
    /// Empty variable box, or restoration bottomed out with violation left.
    Infeasible,
    /// Ran out of iterations before the conditions were met.
    IterationLimit,
    /// Singular KKT system, runaway iterates, or collapsed step sizes.
    NumericalFailure,
}

/// Tolerances and step-control knobs. The four convergence tolerances should
/// sit well above the scalar's epsilon (defaults suit f64).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOpts<F> {
    pub feas_tol: F,
    pub grad_tol: F,
    pub comp_tol: F,
    pub cost_tol: F,
    pub max_iter: usize,
    /// Fraction-to-boundary factor, slightly below one.
    pub xi: F,
    /// Barrier reduction factor in (0, 1].
    pub sigma: F,
    /// Initial slack/multiplier magnitude.
    pub z0: F,
    /// Smallest acceptable fraction-to-boundary step.
    pub alpha_min: F,
}

impl<F: Scalar> Default for SolverOpts<F> {
    fn default() -> Self {
        SolverOpts {
            feas_tol: real(1e-6),
            grad_tol: real(1e-6),
            comp_tol: real(1e-6),
            cost_tol: real(1e-6),
            max_iter: 500,
            xi: real(0.99995),
            sigma: real(0.1),
            z0: real(1.0),
            alpha_min: real(1e-8),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<F> {
    pub status: SolveStatus,
    pub x: Vec<F>,
    /// Objective value at `x` in the caller's maximize orientation.
    pub objective: F,
    /// Largest raw constraint violation at `x` (equality magnitude or
    /// positive inequality part, bounds included).
    pub violation: F,
    pub iterations: usize,
    pub wall_time_s: f64,
}

/// Maximizes the objective subject to the problem's constraints.
pub fn solve<F: Scalar>(p: &ProblemDef<F>, x0: &[F], opts: &SolverOpts<F>) -> SolveResult<F> {
    let min_obj = |x: &[F]| -> (F, Vec<F>) {
        let (v, g) = (p.objective)(x);
        (-v, g.into_iter().map(|gi| -gi).collect())
    };
    let eq_fn = |x: &[F]| (p.eq)(x);
    let ineq_fn = |x: &[F]| (p.ineq)(x);
    let raw = RawProblem {
        n: p.n,
        obj: &min_obj,
        n_eq: p.n_eq,
        eq: &eq_fn,
        n_ineq: p.n_ineq,
        ineq: &ineq_fn,
        lower: &p.lower,
        upper: &p.upper,
    };
    ipm(&raw, x0, opts, true)
}

/// Solves for any point satisfying the constraints (the problem's objective
/// is ignored; the reported objective is zero).
pub fn find_feasible<F: Scalar>(p: &ProblemDef<F>, x0: &[F], opts: &SolverOpts<F>) -> SolveResult<F> {
    let zero_obj = |x: &[F]| -> (F, Vec<F>) { (F::zero(), vec![F::zero(); x.len()]) };
    let eq_fn = |x: &[F]| (p.eq)(x);
    let ineq_fn = |x: &[F]| (p.ineq)(x);
    let raw = RawProblem {
        n: p.n,
        obj: &zero_obj,
        n_eq: p.n_eq,
        eq: &eq_fn,
        n_ineq: p.n_ineq,
        ineq: &ineq_fn,
        lower: &p.lower,
        upper: &p.upper,
    };
    ipm(&raw, x0, opts, true)
}

/// Borrowed problem in minimize orientation, as consumed by the iteration.
struct RawProblem<'a, F: Scalar> {
    n: usize,
    obj: &'a dyn Fn(&[F]) -> (F, Vec<F>),
    n_eq: usize,
    eq: &'a dyn Fn(&[F]) -> (Vec<F>, Triplets<F>),
    n_ineq: usize,
    ineq: &'a dyn Fn(&[F]) -> (Vec<F>, Triplets<F>),
    lower: &'a [F],
    upper: &'a [F],
}

/// Full evaluation at one point: internal objective, full equality rows
/// (user rows then pinned variables) and inequality rows (user rows, finite
/// lower bounds, finite upper bounds), with dense Jacobians.
#[derive(Clone)]
struct Eval<F> {
    f: F,
    df: Vec<F>,
    g: Vec<F>,
    jg: Mat<F>,
    h: Vec<F>,
    jh: Mat<F>,
}

fn lagrangian_gradient<F: Scalar>(ev: &Eval<F>, lam: &[F], mu: &[F]) -> Vec<F> {
    let mut lx = ev.df.clone();
    accumulate_tr(&ev.jg, lam, &mut lx);
    accumulate_tr(&ev.jh, mu, &mut lx);
    lx
}

/// out += M' w
fn accumulate_tr<F: Scalar>(m: &Mat<F>, w: &[F], out: &mut [F]) {
    for r in 0..m.rows {
        let wr = w[r];
        if wr == F::zero() {
            continue;
        }
        for c in 0..m.cols {
            out[c] += m[(r, c)] * wr;
        }
    }
}

/// Scaled convergence measures: (feas, grad, comp, cost).
fn kkt_conds<F: Scalar>(
    f: F,
    f0: F,
    x: &[F],
    z: &[F],
    lam: &[F],
    mu: &[F],
    g: &[F],
    h: &[F],
    lx: &[F],
) -> (F, F, F, F) {
    let one = F::one();
    let mut feas_num = norm_inf(g);
    for &hi in h {
        feas_num = feas_num.max(hi);
    }
    let feascond = feas_num / (one + norm_inf(x).max(norm_inf(z)));
    let gradcond = norm_inf(lx) / (one + norm_inf(lam).max(norm_inf(mu)));
    let compcond = dot(z, mu) / (one + norm_inf(x));
    let costcond = (f - f0).abs() / (one + f0.abs());
    (feascond, gradcond, compcond, costcond)
}

fn raw_violation<F: Scalar>(g: &[F], h: &[F]) -> F {
    let mut v = F::zero();
    for &gi in g {
        v = v.max(gi.abs());
    }
    for &hi in h {
        v = v.max(hi);
    }
    v
}

fn boundary_step<F: Scalar>(v: &[F], dv: &[F], xi: F) -> F {
    let mut cap = F::infinity();
    for k in 0..v.len() {
        if dv[k] < F::zero() {
            cap = cap.min(v[k] / -dv[k]);
        }
    }
    if cap.is_finite() {
        (xi * cap).min(F::one())
    } else {
        F::one()
    }
}

fn ipm<F: Scalar>(
    p: &RawProblem<F>,
    x0: &[F],
    opts: &SolverOpts<F>,
    allow_restoration: bool,
) -> SolveResult<F> {
    let t0 = std::time::Instant::now();
    let n = p.n;
    assert_eq!(x0.len(), n);
    assert_eq!(p.lower.len(), n);
    assert_eq!(p.upper.len(), n);
    assert!(x0.iter().all(|v| v.is_finite()), "start point must be finite");
    assert!(opts.xi < F::one() && opts.xi >= real(0.5));
    assert!(opts.sigma > F::zero() && opts.sigma <= F::one());

    let pin_eps = real::<F>(1e-14);

    // Empty box: infeasible before any iteration.
    let mut box_gap = F::zero();
    for i in 0..n {
        box_gap = box_gap.max(p.lower[i] - p.upper[i]);
    }
    if box_gap > pin_eps {
        let (f, _) = (p.obj)(x0);
        return SolveResult {
            status: SolveStatus::Infeasible,
            x: x0.to_vec(),
            objective: -f,
            violation: box_gap,
            iterations: 0,
            wall_time_s: t0.elapsed().as_secs_f64(),
        };
    }

    // Classify bounds: pinned variables become equality rows, the remaining
    // finite bounds become one-sided inequality rows.
    let mut pinned: Vec<(usize, F)> = Vec::new();
    let mut lows: Vec<usize> = Vec::new();
    let mut ups: Vec<usize> = Vec::new();
    for i in 0..n {
        let (lo, up) = (p.lower[i], p.upper[i]);
        if lo.is_finite() && up.is_finite() && up - lo <= pin_eps {
            pinned.push((i, (lo + up) * real(0.5)));
        } else {
            if lo.is_finite() {
                lows.push(i);
            }
            if up.is_finite() {
                ups.push(i);
            }
        }
    }
    let neq_all = p.n_eq + pinned.len();
    let niq_all = p.n_ineq + lows.len() + ups.len();

    let evaluate = |xv: &[F]| -> Eval<F> {
        let (f, df) = (p.obj)(xv);
        assert_eq!(df.len(), n);
        let (mut g, jg_t) = (p.eq)(xv);
        assert_eq!(g.len(), p.n_eq);
        assert_eq!(jg_t.rows, p.n_eq);
        assert_eq!(jg_t.cols, n);
        let mut jg = Mat::zeros(neq_all, n);
        for &(r, c, v) in &jg_t.entries {
            jg[(r, c)] += v;
        }
        for (k, &(i, c)) in pinned.iter().enumerate() {
            g.push(xv[i] - c);
            jg[(p.n_eq + k, i)] = F::one();
        }
        let (mut h, jh_t) = (p.ineq)(xv);
        assert_eq!(h.len(), p.n_ineq);
        assert_eq!(jh_t.rows, p.n_ineq);
        assert_eq!(jh_t.cols, n);
        let mut jh = Mat::zeros(niq_all, n);
        for &(r, c, v) in &jh_t.entries {
            jh[(r, c)] += v;
        }
        let mut row = p.n_ineq;
        for &i in &lows {
            h.push(p.lower[i] - xv[i]);
            jh[(row, i)] = -F::one();
            row += 1;
        }
        for &i in &ups {
            h.push(xv[i] - p.upper[i]);
            jh[(row, i)] = F::one();
            row += 1;
        }
        Eval { f, df, g, jg, h, jh }
    };

    // Start inside the box (pinned variables sit exactly on their value).
    let mut x: Vec<F> = x0.to_vec();
    for i in 0..n {
        if p.lower[i].is_finite() {
            x[i] = x[i].max(p.lower[i]);
        }
        if p.upper[i].is_finite() {
            x[i] = x[i].min(p.upper[i]);
        }
    }
    for &(i, c) in &pinned {
        x[i] = c;
    }
    let x_start = x.clone();

    let mut ev = evaluate(&x);
    let mut gamma = F::one();
    let mut lam = vec![F::zero(); neq_all];
    let mut z: Vec<F> = ev.h.iter().map(|&hk| opts.z0.max(-hk)).collect();
    let mut mu: Vec<F> = z.iter().map(|&zk| opts.z0.max(gamma / zk)).collect();
    let mut lx = lagrangian_gradient(&ev, &lam, &mu);
    let mut f0 = ev.f;
    let mut bmat = Mat::eye(n);

    let (fc, gc, cc, tc) = kkt_conds(ev.f, f0, &x, &z, &lam, &mu, &ev.g, &ev.h, &lx);
    let mut converged = fc < opts.feas_tol
        && gc < opts.grad_tol
        && cc < opts.comp_tol
        && tc < opts.cost_tol
        && raw_violation(&ev.g, &ev.h) <= opts.feas_tol;

    let mut iterations = 0usize;
    let mut failed = false;

    while !converged && iterations < opts.max_iter {
        iterations += 1;

        // Condensed KKT system; small diagonal shifts rescue singular runs.
        let mut mmat = bmat.clone();
        let mut nvec = lx.clone();
        let mut jh_row = vec![F::zero(); n];
        for k in 0..niq_all {
            let zk = z[k];
            for c in 0..n {
                jh_row[c] = ev.jh[(k, c)];
            }
            mmat.add_outer(mu[k] / zk, &jh_row);
            let w = (mu[k] * ev.h[k] + gamma) / zk;
            for c in 0..n {
                nvec[c] += jh_row[c] * w;
            }
        }
        let dim = n + neq_all;
        let mut step: Option<Vec<F>> = None;
        for &reg in &[0.0, 1e-8, 1e-6, 1e-4, 1e-2] {
            let delta = real::<F>(reg);
            let mut kkt = Mat::zeros(dim, dim);
            for r in 0..n {
                for c in 0..n {
                    kkt[(r, c)] = mmat[(r, c)];
                }
                kkt[(r, r)] += delta;
            }
            for r in 0..neq_all {
                for c in 0..n {
                    let v = ev.jg[(r, c)];
                    kkt[(n + r, c)] = v;
                    kkt[(c, n + r)] = v;
                }
                kkt[(n + r, n + r)] = -delta;
            }
            let mut rhs = Vec::with_capacity(dim);
            for &v in &nvec {
                rhs.push(-v);
            }
            for &v in &ev.g {
                rhs.push(-v);
            }
            if let Some(s) = lu_solve(kkt, rhs) {
                if s.iter().all(|v| v.is_finite()) && norm2(&s) <= real::<F>(1e10) {
                    step = Some(s);
                    break;
                }
            }
        }
        let Some(sol) = step else {
            failed = true;
            break;
        };
        let dx = &sol[..n];
        let dlam = &sol[n..];

        let jh_dx = ev.jh.matvec(dx);
        let mut dz = vec![F::zero(); niq_all];
        let mut dmu = vec![F::zero(); niq_all];
        for k in 0..niq_all {
            dz[k] = -ev.h[k] - z[k] - jh_dx[k];
            dmu[k] = -mu[k] + (gamma - mu[k] * dz[k]) / z[k];
        }

        // Fraction-to-boundary caps keep z and mu strictly positive; the
        // shrinking barrier weight, not a merit line search, drives progress.
        let alphap = boundary_step(&z, &dz, opts.xi);
        let alphad = boundary_step(&mu, &dmu, opts.xi);

        let x_old = x.clone();
        for i in 0..n {
            x[i] += alphap * dx[i];
        }
        for k in 0..niq_all {
            z[k] += alphap * dz[k];
            mu[k] += alphad * dmu[k];
        }
        for j in 0..neq_all {
            lam[j] += alphad * dlam[j];
        }
        if niq_all > 0 {
            gamma = opts.sigma * dot(&z, &mu) / real::<F>(niq_all as f64);
        }

        let ev_old = std::mem::replace(&mut ev, evaluate(&x));
        lx = lagrangian_gradient(&ev, &lam, &mu);

        // Damped BFGS update from the multiplier-consistent gradient change.
        let s: Vec<F> = (0..n).map(|i| x[i] - x_old[i]).collect();
        if norm_inf(&s) > real::<F>(1e-14) {
            let lx_old = lagrangian_gradient(&ev_old, &lam, &mu);
            let y: Vec<F> = (0..n).map(|i| lx[i] - lx_old[i]).collect();
            let bs = bmat.matvec(&s);
            let s_bs = dot(&s, &bs);
            if s_bs > real::<F>(1e-16) {
                let sy = dot(&s, &y);
                let r: Vec<F> = if sy < real::<F>(0.2) * s_bs {
                    let theta = real::<F>(0.8) * s_bs / (s_bs - sy);
                    (0..n)
                        .map(|i| theta * y[i] + (F::one() - theta) * bs[i])
                        .collect()
                } else {
                    y
                };
                let sr = dot(&s, &r);
                if sr > real::<F>(1e-16) {
                    bmat.add_outer(-(F::one() / s_bs), &bs);
                    bmat.add_outer(F::one() / sr, &r);
                }
            }
            let mut bmax = F::zero();
            for rr in 0..n {
                for cc in 0..n {
                    bmax = bmax.max(bmat[(rr, cc)].abs());
                }
            }
            if bmax > real::<F>(1e12) {
                bmat = Mat::eye(n);
            }
        }

        let (fc, gc, cc, tc) = kkt_conds(ev.f, f0, &x, &z, &lam, &mu, &ev.g, &ev.h, &lx);
        converged = fc < opts.feas_tol
            && gc < opts.grad_tol
            && cc < opts.comp_tol
            && tc < opts.cost_tol
            && raw_violation(&ev.g, &ev.h) <= opts.feas_tol;
        if !converged {
            let stuck = x.iter().any(|v| !v.is_finite())
                || alphap < opts.alpha_min
                || alphad < opts.alpha_min
                || (niq_all > 0
                    && (gamma < F::epsilon() || gamma > F::one() / F::epsilon()));
            if stuck {
                failed = true;
                break;
            }
            f0 = ev.f;
        }
    }

    let mut status = if converged {
        SolveStatus::Optimal
    } else if failed {
        SolveStatus::NumericalFailure
    } else {
        SolveStatus::IterationLimit
    };
    let mut out_x = x.clone();
    let mut out_obj = -ev.f;
    let mut out_viol = raw_violation(&ev.g, &ev.h);

    // A failed run gets one restoration pass: minimize the squared violation
    // of the functional rows over the box alone, from the caller's start —
    // the failed run's own iterate may have drifted somewhere the
    // least-squares surface is hopeless. A clean minimum with real violation
    // left proves the constraint set empty; otherwise keep the original
    // failure status.
    if !converged && allow_restoration {
        let rest_obj = |xr: &[F]| -> (F, Vec<F>) {
            let (gv, jg_t) = (p.eq)(xr);
            let (hv, jh_t) = (p.ineq)(xr);
            let halfc = real::<F>(0.5);
            let mut val = F::zero();
            for &v in &gv {
                val += halfc * v * v;
            }
            let hplus: Vec<F> = hv.iter().map(|&v| v.max(F::zero())).collect();
            for &v in &hplus {
                val += halfc * v * v;
            }
            let mut grad = jg_t.tr_vec(&gv);
            let gh = jh_t.tr_vec(&hplus);
            for i in 0..n {
                grad[i] += gh[i];
            }
            (val, grad)
        };
        let no_rows = |_: &[F]| -> (Vec<F>, Triplets<F>) { (Vec::new(), Triplets::new(0, n)) };
        let rest_p = RawProblem {
            n,
            obj: &rest_obj,
            n_eq: 0,
            eq: &no_rows,
            n_ineq: 0,
            ineq: &no_rows,
            lower: p.lower,
            upper: p.upper,
        };
        let rest = ipm(&rest_p, &x_start, opts, false);
        if rest.status == SolveStatus::Optimal {
            let evr = evaluate(&rest.x);
            let viol = raw_violation(&evr.g, &evr.h);
            if viol > opts.feas_tol.sqrt() {
                status = SolveStatus::Infeasible;
                out_x = rest.x;
                out_obj = -evr.f;
                out_viol = viol;
            }
        }
    }

    SolveResult {
        status,
        x: out_x,
        objective: out_obj,
        violation: out_viol,
        iterations,
        wall_time_s: t0.elapsed().as_secs_f64(),
    }
}
