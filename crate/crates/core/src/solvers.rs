//! Douglas–Rachford, GCRM and L_T iterations on a two-set feasibility
//! problem, and the two-stage driver (global DR, then a local method).

use std::cell::Cell;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{circumcenter_with_tol, colinear, HPoint, Point, DEFAULT_COLINEAR_TOL};
use crate::constraints::{project_w, ProblemSpec, WaveletSets};
use crate::ensemble::{Ensemble, ProductPoint};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A feasibility problem `find x ∈ V ∩ W` given by the two projectors.
pub trait TwoSetProblem<T: Real> {
    type Point: Point<T>;
    fn project_v(&self, x: &Self::Point) -> Self::Point;
    fn project_w(&self, x: &Self::Point) -> Self::Point;
}

impl<T: Real> TwoSetProblem<T> for WaveletSets<T> {
    type Point = ProductPoint<T>;

    fn project_v(&self, x: &ProductPoint<T>) -> ProductPoint<T> {
        WaveletSets::project_v(self, x)
    }

    fn project_w(&self, x: &ProductPoint<T>) -> ProductPoint<T> {
        project_w(x)
    }
}

/// Two lines through the origin of the plane (points are 2-vectors with zero
/// imaginary parts). Their only common point is the origin unless they
/// coincide.
#[derive(Clone, Copy, Debug)]
pub struct LinePair<T> {
    pub v_angle: T,
    pub w_angle: T,
}

impl<T: Real> LinePair<T> {
    fn project_line(angle: T, x: &HPoint<T>) -> HPoint<T> {
        let (s, c) = angle.sin_cos();
        let t = x.coords[0].re * c + x.coords[1].re * s;
        HPoint::from_real(&[t * c, t * s])
    }
}

impl<T: Real> TwoSetProblem<T> for LinePair<T> {
    type Point = HPoint<T>;

    fn project_v(&self, x: &HPoint<T>) -> HPoint<T> {
        Self::project_line(self.v_angle, x)
    }

    fn project_w(&self, x: &HPoint<T>) -> HPoint<T> {
        Self::project_line(self.w_angle, x)
    }
}

/// Wraps a problem and counts projector applications.
pub struct Counted<'a, Pr> {
    inner: &'a Pr,
    v_calls: Cell<u64>,
    w_calls: Cell<u64>,
}

impl<'a, Pr> Counted<'a, Pr> {
    pub fn new(inner: &'a Pr) -> Self {
        Self { inner, v_calls: Cell::new(0), w_calls: Cell::new(0) }
    }

    /// Total number of `P_V` and `P_W` evaluations so far.
    pub fn evaluations(&self) -> u64 {
        self.v_calls.get() + self.w_calls.get()
    }
}

impl<T: Real, Pr: TwoSetProblem<T>> TwoSetProblem<T> for Counted<'_, Pr> {
    type Point = Pr::Point;

    fn project_v(&self, x: &Self::Point) -> Self::Point {
        self.v_calls.set(self.v_calls.get() + 1);
        self.inner.project_v(x)
    }

    fn project_w(&self, x: &Self::Point) -> Self::Point {
        self.w_calls.set(self.w_calls.get() + 1);
        self.inner.project_w(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dr,
    Gcrm,
    Lt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Dr, Algorithm::Gcrm, Algorithm::Lt];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dr => "DR",
            Algorithm::Gcrm => "GCRM",
            Algorithm::Lt => "LT",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dr" => Ok(Algorithm::Dr),
            "gcrm" => Ok(Algorithm::Gcrm),
            "lt" => Ok(Algorithm::Lt),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

struct Reflections<P> {
    pv: P,
    r1: P,
    pw: P,
    r2: P,
}

fn reflections<T: Real, Pr: TwoSetProblem<T>>(pr: &Pr, x: &Pr::Point) -> Reflections<Pr::Point> {
    let two = T::lit(2.0);
    let pv = pr.project_v(x);
    let r1 = pv.lin_comb(two, x, -T::one());
    let pw = pr.project_w(&r1);
    let r2 = pw.lin_comb(two, &r1, -T::one());
    Reflections { pv, r1, pw, r2 }
}

fn dr_from<T: Real, P: Point<T>>(x: &P, r: &Reflections<P>) -> P {
    x.minus(&r.pv).plus(&r.pw)
}

/// `T(x) = x − P_V(x) + P_W(R_V(x))`.
pub fn dr_step<T: Real, Pr: TwoSetProblem<T>>(pr: &Pr, x: &Pr::Point) -> Pr::Point {
    dr_from(x, &reflections(pr, x))
}

/// Circumcenter of `x`, `R_V x`, `R_W R_V x`, or the DR step when the three
/// points are colinear.
pub fn gcrm_step<T: Real, Pr: TwoSetProblem<T>>(pr: &Pr, x: &Pr::Point, colinear_tol: T) -> Pr::Point {
    let r = reflections(pr, x);
    if colinear(x, &r.r1, &r.r2, colinear_tol) {
        return dr_from(x, &r);
    }
    circumcenter_with_tol(x, &r.r1, &r.r2, colinear_tol).unwrap_or_else(|_| dr_from(x, &r))
}

/// `π_T(x) = 2(T²x − Tx) + 2·P_{span(T²x − Tx)}(Tx − x) + x`; equal to `x`
/// when `T²x = Tx`.
pub fn pi_t<T: Real, P: Point<T>>(x: &P, tx: &P, t2x: &P) -> P {
    let d = t2x.minus(tx);
    let dd = d.norm_sqr();
    let scale = T::one() + x.norm();
    if dd.sqrt() <= T::lit(1e-14) * scale {
        return x.clone();
    }
    let two = T::lit(2.0);
    let coef = two + two * tx.minus(x).inner(&d) / dd;
    d.lin_comb(coef, x, T::one())
}

/// Circumcenter of `x`, `2Tx − x`, `π_T(x)`, or `T²x` when they are colinear.
/// Costs two DR evaluations.
pub fn lt_step<T: Real, Pr: TwoSetProblem<T>>(pr: &Pr, x: &Pr::Point, colinear_tol: T) -> Pr::Point {
    let tx = dr_step(pr, x);
    let t2x = dr_step(pr, &tx);
    let p = pi_t(x, &tx, &t2x);
    let y = tx.lin_comb(T::lit(2.0), x, -T::one());
    if colinear(x, &y, &p, colinear_tol) {
        return t2x;
    }
    circumcenter_with_tol(x, &y, &p, colinear_tol).unwrap_or(t2x)
}

/// Gap `‖P_V(P_W x) − P_W x‖`; below tolerance, `P_W x` is feasible.
pub fn gap<T: Real, Pr: TwoSetProblem<T>>(pr: &Pr, x: &Pr::Point) -> T {
    let w = pr.project_w(x);
    pr.project_v(&w).distance(&w)
}

pub fn step<T: Real, Pr: TwoSetProblem<T>>(pr: &Pr, alg: Algorithm, x: &Pr::Point, colinear_tol: T) -> Pr::Point {
    match alg {
        Algorithm::Dr => dr_step(pr, x),
        Algorithm::Gcrm => gcrm_step(pr, x, colinear_tol),
        Algorithm::Lt => lt_step(pr, x, colinear_tol),
    }
}

/// Outcome of iterating one method until a gap threshold or a budget.
#[derive(Clone, Debug)]
pub struct Stage<P, T> {
    pub x: P,
    pub gap: T,
    pub iters: usize,
    /// Gap after every step of this stage.
    pub trace: Vec<T>,
    /// `P_V` plus `P_W` evaluations, gap checks included.
    pub projection_evals: u64,
}

impl<P, T: Real> Stage<P, T> {
    pub fn reached(&self, threshold: T) -> bool {
        self.gap < threshold
    }
}

/// Iterates `alg` from `x` (whose gap is `gap0`) while the gap is at least
/// `threshold` and fewer than `budget` steps were taken. The gap is evaluated
/// once after every step.
pub fn iterate<T: Real, Pr: TwoSetProblem<T>>(
    pr: &Pr,
    alg: Algorithm,
    x: Pr::Point,
    gap0: T,
    threshold: T,
    budget: usize,
    colinear_tol: T,
) -> Stage<Pr::Point, T> {
    let counted = Counted::new(pr);
    let mut x = x;
    let mut g = gap0;
    let mut iters = 0;
    let mut trace = Vec::new();
    while !(g < threshold) && iters < budget {
        x = step(&counted, alg, &x, colinear_tol);
        g = gap(&counted, &x);
        iters += 1;
        trace.push(g);
    }
    Stage { x, gap: g, iters, trace, projection_evals: counted.evaluations() }
}

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_STAGE1_THRESHOLD: f64 = 1e-2;
pub const DEFAULT_MAX_ITERS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SolveConfig<T: Real> {
    pub spec: ProblemSpec<T>,
    pub tol: T,
    pub stage1_threshold: T,
    /// Cap on stage-1 plus stage-2 iterations.
    pub max_iters: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub colinear_tol: T,
    pub record_trace: bool,
}

impl<T: Real> SolveConfig<T> {
    pub fn new(spec: ProblemSpec<T>, algorithm: Algorithm, seed: u64) -> Self {
        Self {
            spec,
            tol: T::lit(DEFAULT_TOL),
            stage1_threshold: T::lit(DEFAULT_STAGE1_THRESHOLD),
            max_iters: DEFAULT_MAX_ITERS,
            algorithm,
            seed,
            colinear_tol: T::lit(DEFAULT_COLINEAR_TOL),
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.tol > T::zero() && self.tol < self.stage1_threshold) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < tol < stage1_threshold, got tol = {}, threshold = {}",
                self.tol, self.stage1_threshold
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.colinear_tol > T::zero()) {
            return Err(Error::InvalidConfig("colinear_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Result of one two-stage run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct RunRecord<T: Real> {
    pub solved: bool,
    pub stage1_iters: usize,
    pub stage2_iters: usize,
    pub final_gap: T,
    /// Projector evaluations during stage 2, gap checks included.
    pub projection_evals: u64,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Iteration cap; it bounds `stage1_iters + stage2_iters`.
    pub max_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<T>>,
    /// `P_W` of the final iterate (first part), present iff solved.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solution: Option<Ensemble<T>>,
}

/// Stage 1 shared by every algorithm: DR from the diagonal start point until
/// the gap drops below the switch-over threshold.
#[derive(Clone, Debug)]
pub struct Stage1<T: Real> {
    pub seed: u64,
    pub initial_gap: T,
    pub stage: Stage<ProductPoint<T>, T>,
}

pub fn run_stage1<T: Real>(sets: &WaveletSets<T>, cfg: &SolveConfig<T>) -> Result<Stage1<T>> {
    cfg.validate()?;
    let e0 = Ensemble::random(cfg.spec.m, cfg.seed)?;
    let x0 = ProductPoint::diagonal(&e0);
    let g0 = gap(sets, &x0);
    let stage = iterate(sets, Algorithm::Dr, x0, g0, cfg.stage1_threshold, cfg.max_iters, cfg.colinear_tol);
    Ok(Stage1 { seed: cfg.seed, initial_gap: g0, stage })
}

/// Continues from a stage-1 endpoint with `cfg.algorithm`.
pub fn run_stage2<T: Real>(sets: &WaveletSets<T>, s1: &Stage1<T>, cfg: &SolveConfig<T>) -> RunRecord<T> {
    let reached = s1.stage.reached(cfg.stage1_threshold);
    let (stage2, x, g) = if reached {
        let budget = cfg.max_iters - s1.stage.iters;
        let st = iterate(sets, cfg.algorithm, s1.stage.x.clone(), s1.stage.gap, cfg.tol, budget, cfg.colinear_tol);
        let (x, g) = (st.x.clone(), st.gap);
        (Some(st), x, g)
    } else {
        (None, s1.stage.x.clone(), s1.stage.gap)
    };
    let solved = g < cfg.tol;
    let trace = cfg.record_trace.then(|| {
        let mut t = vec![s1.initial_gap];
        t.extend(&s1.stage.trace);
        if let Some(st) = &stage2 {
            t.extend(&st.trace);
        }
        t
    });
    RunRecord {
        solved,
        stage1_iters: s1.stage.iters,
        stage2_iters: stage2.as_ref().map_or(0, |s| s.iters),
        final_gap: g,
        projection_evals: stage2.as_ref().map_or(0, |s| s.projection_evals),
        seed: cfg.seed,
        algorithm: cfg.algorithm,
        max_iters: cfg.max_iters,
        trace,
        solution: solved.then(|| project_w(&x).parts[0].clone()),
    }
}

/// Two-stage search from `random_ensemble(M, seed)`.
pub fn two_stage_solve<T: Real>(cfg: &SolveConfig<T>) -> Result<RunRecord<T>> {
    let sets = WaveletSets::new(cfg.spec.clone())?;
    solve_with(&sets, cfg)
}

pub fn solve_with<T: Real>(sets: &WaveletSets<T>, cfg: &SolveConfig<T>) -> Result<RunRecord<T>> {
    if sets.spec() != &cfg.spec {
        return Err(Error::InvalidConfig("constraint sets were built for a different spec".into()));
    }
    let s1 = run_stage1(sets, cfg)?;
    Ok(run_stage2(sets, &s1, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::verify;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn p2(a: f64, b: f64) -> HPoint<f64> {
        HPoint::from_real(&[a, b])
    }

    fn re(x: &HPoint<f64>) -> Vec<f64> {
        x.coords.iter().map(|z| z.re).collect()
    }

    /// Two single points on the real line; DR is the translation `x − a + b`.
    struct Singletons {
        a: f64,
        b: f64,
    }

    impl TwoSetProblem<f64> for Singletons {
        type Point = HPoint<f64>;
        fn project_v(&self, _: &HPoint<f64>) -> HPoint<f64> {
            HPoint::from_real(&[self.a])
        }
        fn project_w(&self, _: &HPoint<f64>) -> HPoint<f64> {
            HPoint::from_real(&[self.b])
        }
    }

    #[test]
    fn dr_on_orthogonal_axes_is_zero() {
        let pr = LinePair { v_angle: 0.0, w_angle: FRAC_PI_2 };
        for (a, b) in [(1.0, 2.0), (-3.0, 0.5), (0.0, 0.0)] {
            assert!(dr_step(&pr, &p2(a, b)).norm() < 1e-15);
        }
    }

    #[test]
    fn dr_matches_linear_map_for_two_lines() {
        let theta = 0.7;
        let pr = LinePair { v_angle: 0.0, w_angle: theta };
        // T = I − P_V + P_W (2 P_V − I) as an explicit 2×2 matrix
        let proj = |t: f64| [[t.cos() * t.cos(), t.cos() * t.sin()], [t.cos() * t.sin(), t.sin() * t.sin()]];
        let (pv, pw) = (proj(0.0), proj(theta));
        let mut tm = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let pwrv: f64 = (0..2).map(|k| pw[i][k] * (2.0 * pv[k][j] - if k == j { 1.0 } else { 0.0 })).sum();
                tm[i][j] = if i == j { 1.0 } else { 0.0 } - pv[i][j] + pwrv;
            }
        }
        let mut x = p2(1.0, 0.3);
        let mut y = [1.0, 0.3];
        let n0 = x.norm();
        for n in 1..=100 {
            x = dr_step(&pr, &x);
            y = [tm[0][0] * y[0] + tm[0][1] * y[1], tm[1][0] * y[0] + tm[1][1] * y[1]];
            let got = re(&x);
            assert!((got[0] - y[0]).abs() < 1e-12 && (got[1] - y[1]).abs() < 1e-12, "step {n}");
            assert!((x.norm() - n0 * theta.cos().powi(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn gcrm_solves_two_lines_in_one_step() {
        let pr = LinePair { v_angle: 0.2, w_angle: 0.2 + FRAC_PI_3 };
        let x0 = p2(1.0, 0.0);
        let g = gcrm_step(&pr, &x0, 1e-12);
        assert!(gap(&pr, &g) < 1e-12 && g.norm() < 1e-12);
        let mut x = x0;
        let mut dr_steps = 0;
        while gap(&pr, &x) >= 1e-12 {
            x = dr_step(&pr, &x);
            dr_steps += 1;
        }
        assert!(dr_steps >= 20, "{dr_steps}");
        // generic start as well
        assert!(gcrm_step(&pr, &p2(-2.0, 5.0), 1e-12).norm() < 1e-12);
    }

    #[test]
    fn fixed_points_are_kept() {
        let pr = LinePair { v_angle: 0.3, w_angle: 1.1 };
        let origin = p2(0.0, 0.0);
        for alg in Algorithm::ALL {
            assert_eq!(re(&step(&pr, alg, &origin, 1e-12)), [0.0, 0.0]);
        }
        let same = LinePair { v_angle: 0.4, w_angle: 0.4 };
        let on = p2(0.4f64.cos(), 0.4f64.sin()).scaled(3.0);
        assert!(lt_step(&same, &on, 1e-12).distance(&on) < 1e-15);
        assert!(gcrm_step(&same, &on, 1e-12).distance(&on) < 1e-15);
    }

    #[test]
    fn pi_t_examples() {
        let x = p2(1.0, 2.0);
        assert_eq!(pi_t(&x, &x, &x), x);
        // 1-D affine T: every point on one line
        let pr = Singletons { a: 1.0, b: 3.0 };
        let x = HPoint::from_real(&[0.5]);
        let tx = dr_step(&pr, &x);
        let t2x = dr_step(&pr, &tx);
        assert_eq!(re(&tx), [2.5]);
        let p = pi_t(&x, &tx, &t2x);
        assert_eq!(re(&p), [2.0 * 2.0 + 2.0 * 2.0 + 0.5]);
        assert_eq!(re(&lt_step(&pr, &x, 1e-12)), re(&t2x));
        // spiral
        let (c, s) = (0.5 * 0.9f64.cos(), 0.5 * 0.9f64.sin());
        let rot = |v: &HPoint<f64>| {
            let r = re(v);
            p2(c * r[0] - s * r[1], s * r[0] + c * r[1])
        };
        let x = p2(1.0, 0.0);
        let tx = rot(&x);
        let t2x = rot(&tx);
        let d = [re(&t2x)[0] - re(&tx)[0], re(&t2x)[1] - re(&tx)[1]];
        let u = [re(&tx)[0] - 1.0, re(&tx)[1]];
        let k = (u[0] * d[0] + u[1] * d[1]) / (d[0] * d[0] + d[1] * d[1]);
        let want = [2.0 * d[0] + 2.0 * k * d[0] + 1.0, 2.0 * d[1] + 2.0 * k * d[1]];
        let p = re(&pi_t(&x, &tx, &t2x));
        assert!((p[0] - want[0]).abs() < 1e-15 && (p[1] - want[1]).abs() < 1e-15);
        assert!(p2(p[0], p[1]).distance(&x) > 1e-3);
        assert!(p2(p[0], p[1]).distance(&tx.lin_comb(2.0, &x, -1.0)) > 1e-3);
    }

    #[test]
    fn gcrm_circumcenter_is_equidistant_on_wavelet_problem() {
        let sets = WaveletSets::new(ProblemSpec::<f64>::symmetric()).unwrap();
        let mut branch = 0;
        for seed in 0..10 {
            let parts = [0, 1, 2, 3].map(|i| Ensemble::random(6, 10 * seed + i).unwrap());
            let x = ProductPoint::new(parts);
            let r1 = reflect_v(&sets, &x);
            let r2 = project_w(&r1).lin_comb(2.0, &r1, -1.0);
            if colinear(&x, &r1, &r2, 1e-12) {
                continue;
            }
            branch += 1;
            let c = gcrm_step(&sets, &x, 1e-12);
            let (a, b, d) = (c.distance(&x), c.distance(&r1), c.distance(&r2));
            let scale = 1.0 + x.norm();
            assert!((a - b).abs() < 1e-9 * scale && (a - d).abs() < 1e-9 * scale);
        }
        assert!(branch > 0);
    }

    fn reflect_v(sets: &WaveletSets<f64>, x: &ProductPoint<f64>) -> ProductPoint<f64> {
        sets.project_v(x).lin_comb(2.0, x, -1.0)
    }

    #[test]
    fn gap_is_lipschitz() {
        let sets = WaveletSets::new(ProblemSpec::<f64>::cardinal()).unwrap();
        for seed in 0..10 {
            let x = ProductPoint::diagonal(&Ensemble::random(6, seed).unwrap());
            let y = ProductPoint::diagonal(&Ensemble::random(6, seed + 50).unwrap().scaled(0.1)).plus(&x);
            assert!((gap(&sets, &x) - gap(&sets, &y)).abs() <= 2.0 * x.distance(&y) + 1e-10);
        }
    }

    #[test]
    fn config_validation() {
        let spec = ProblemSpec::<f64>::symmetric();
        assert!(SolveConfig::new(spec.clone(), Algorithm::Lt, 0).validate().is_ok());
        let bad = [
            SolveConfig { tol: 0.0, ..SolveConfig::new(spec.clone(), Algorithm::Lt, 0) },
            SolveConfig { tol: 0.1, ..SolveConfig::new(spec.clone(), Algorithm::Lt, 0) },
            SolveConfig { max_iters: 0, ..SolveConfig::new(spec.clone(), Algorithm::Lt, 0) },
        ];
        for cfg in bad {
            assert!(matches!(two_stage_solve(&cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn vacuous_stopping() {
        let cfg = SolveConfig {
            tol: 1e3,
            stage1_threshold: 1e4,
            ..SolveConfig::new(ProblemSpec::<f64>::symmetric(), Algorithm::Gcrm, 3)
        };
        let r = two_stage_solve(&cfg).unwrap();
        assert!(r.solved);
        assert_eq!((r.stage1_iters, r.stage2_iters, r.projection_evals), (0, 0, 0));
    }

    #[test]
    fn cap_bounds_total_iterations() {
        let cfg = SolveConfig { max_iters: 7, ..SolveConfig::new(ProblemSpec::<f64>::symmetric(), Algorithm::Lt, 3) };
        let r = two_stage_solve(&cfg).unwrap();
        assert!(!r.solved && r.solution.is_none());
        assert!(r.stage1_iters + r.stage2_iters <= 7);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = SolveConfig::new(ProblemSpec::<f64>::cardinal(), Algorithm::Lt, 21);
        cfg.record_trace = true;
        cfg.max_iters = 300;
        let a = two_stage_solve(&cfg).unwrap();
        let b = two_stage_solve(&cfg).unwrap();
        assert_eq!(a, b);
        let trace = a.trace.as_ref().unwrap();
        assert_eq!(trace.len(), 1 + a.stage1_iters + a.stage2_iters);
        assert_eq!(*trace.last().unwrap(), a.final_gap);
    }

    #[test]
    fn lt_solution_passes_verification() {
        let spec = ProblemSpec::<f64>::cardinal();
        let sets = WaveletSets::new(spec.clone()).unwrap();
        let solved = (0..20)
            .map(|seed| solve_with(&sets, &SolveConfig::new(spec.clone(), Algorithm::Lt, seed)).unwrap())
            .find(|r| r.solved)
            .expect("some seed solves");
        assert!(solved.final_gap < 1e-9);
        let report = verify(solved.solution.as_ref().unwrap(), &sets).unwrap();
        assert!(report.passes(1e-7, 1e-6), "{report:?}");
    }

    #[test]
    fn algorithm_names() {
        for (alg, name) in Algorithm::ALL.iter().zip(["dr", "gcrm", "lt"]) {
            assert_eq!(name.parse::<Algorithm>().unwrap(), *alg);
            assert_eq!(serde_json::to_string(alg).unwrap(), format!("\"{name}\""));
        }
        assert_eq!(Algorithm::Lt.to_string(), "LT");
        assert!("crm".parse::<Algorithm>().is_err());
    }

    #[test]
    fn run_record_json() {
        let cfg = SolveConfig { max_iters: 3, ..SolveConfig::new(ProblemSpec::<f64>::symmetric(), Algorithm::Dr, 1) };
        let v = serde_json::to_value(two_stage_solve(&cfg).unwrap()).unwrap();
        for key in ["solved", "stage1_iters", "stage2_iters", "final_gap", "projection_evals", "seed", "algorithm"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v.get("trace").is_none() && v.get("solution").is_none());
    }
}
