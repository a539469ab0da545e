//! Constraint sets on ensembles and their nearest-point projections.
//!
//! Every projection acts on the free samples only, so the consistency
//! relation is preserved structurally. Because the ensemble norm is a fixed
//! multiple of the Euclidean norm of the free coordinates, nearest points may
//! be computed in either metric.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{polar_unitary, Mat2, Point, RealMatrix, SymmetricEigen};
use crate::ensemble::{unit_root, Ensemble, ProductPoint};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which near-property the fourth constraint set promotes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Symmetric,
    Cardinal,
}

/// Phase attached to the symmetry defect at sample `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// `e^{4πiPj/M}`: symmetry of the scaling function about `x = P`.
    FourPi,
    /// `e^{2πiPj/M}`.
    TwoPi,
}

/// Which entries the near-symmetry defect measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryScope {
    /// Only the scaling filter: `|H_j − c_j·H_{M−j}| ≤ γ`.
    ScalingFilter,
    /// The whole sample: `‖U_j − c_j·K·U_{M−j}·K‖ ≤ γ`. For integer `P` the
    /// pair constraints at `j` and `M/2 − j` cannot both hold on unitary
    /// samples, so this scope is mostly useful for half-integer `P`.
    FullMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ProblemSpec<T: Real> {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub gamma: T,
    #[serde(rename = "P")]
    pub p: T,
    pub kind: ProblemKind,
    pub phase: PhaseConvention,
    pub scope: SymmetryScope,
}

impl<T: Real> ProblemSpec<T> {
    /// `M = 6, D = 1, γ = 0.5`, near symmetry about `P = 2`.
    pub fn symmetric() -> Self {
        Self {
            m: 6,
            d: 1,
            gamma: T::lit(0.5),
            p: T::lit(2.0),
            kind: ProblemKind::Symmetric,
            phase: PhaseConvention::FourPi,
            scope: SymmetryScope::ScalingFilter,
        }
    }

    /// `M = 6, D = 1, γ = 0.5`, near cardinality at `P = 1`.
    pub fn cardinal() -> Self {
        Self { kind: ProblemKind::Cardinal, p: T::one(), ..Self::symmetric() }
    }

    pub fn default_for(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::Symmetric => Self::symmetric(),
            ProblemKind::Cardinal => Self::cardinal(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.m < 4 || self.m % 2 != 0 {
            return bad(format!("M must be even and at least 4, got {}", self.m));
        }
        if self.d > (self.m - 2) / 2 {
            return bad(format!("D must be at most (M-2)/2 = {}, got {}", (self.m - 2) / 2, self.d));
        }
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        let last = T::from_usize_lossy(self.m - 1);
        match self.kind {
            ProblemKind::Symmetric => {
                if !(self.p > T::zero() && self.p < last) {
                    return bad(format!("symmetry center P must lie in (0, M-1), got {}", self.p));
                }
            }
            ProblemKind::Cardinal => {
                if self.p.fract() != T::zero() || self.p < T::zero() || self.p > last {
                    return bad(format!("cardinal point P must be an integer in [0, M-1], got {}", self.p));
                }
            }
        }
        Ok(())
    }

    /// Symmetry phase `c_j` at sample `j`.
    pub fn symmetry_phase(&self, j: usize) -> Complex<T> {
        let factor = match self.phase {
            PhaseConvention::FourPi => T::lit(4.0),
            PhaseConvention::TwoPi => T::lit(2.0),
        };
        let theta = factor * T::PI() * self.p * T::from_usize_lossy(j) / T::from_usize_lossy(self.m);
        Complex::from_polar(T::one(), theta)
    }

    fn cardinal_point(&self) -> i64 {
        self.p.round().to_i64().unwrap_or(0)
    }
}

/// A map from an ensemble to complex values that is affine in the ensemble.
type Defect<T> = Box<dyn Fn(&Ensemble<T>) -> Vec<Complex<T>> + Send + Sync>;

/// Real matrix and offset of an affine map, in free coordinates
/// (see [`Ensemble::free_coords`]). Output `o` maps to rows `2o` (real part)
/// and `2o + 1` (imaginary part).
fn realify_affine<T: Real>(m: usize, f: &dyn Fn(&Ensemble<T>) -> Vec<Complex<T>>) -> (RealMatrix<T>, Vec<T>) {
    let zero = Ensemble::zeros(m).expect("validated size");
    let base = f(&zero);
    let n = 4 * m;
    let mut mat = RealMatrix::zeros(2 * base.len(), n);
    let mut unit = vec![T::zero(); n];
    for col in 0..n {
        unit[col] = T::one();
        let e = Ensemble::from_free_coords(m, &unit).expect("validated size");
        unit[col] = T::zero();
        for (o, (v, b)) in f(&e).iter().zip(&base).enumerate() {
            let d = v - b;
            mat[(2 * o, col)] = d.re;
            mat[(2 * o + 1, col)] = d.im;
        }
    }
    let offset = base.iter().flat_map(|z| [z.re, z.im]).collect();
    (mat, offset)
}

fn vec_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt()
}

#[derive(Clone, Debug)]
enum BallSolver<T> {
    /// `L·Lᵀ = s·I`: closed-form correction along `Lᵀ·r`.
    Tight { s: T },
    /// Homogeneous constraint with non-scalar `LᵀL`: secular equation in the
    /// eigenbasis of `LᵀL`.
    Secular { eig: SymmetricEigen<T> },
}

/// The convex set `{x : ‖L·x_S + b‖ ≤ γ}` where `x_S` are the coordinates
/// listed in `coords`.
#[derive(Clone, Debug)]
struct DefectBall<T> {
    coords: Vec<usize>,
    l: RealMatrix<T>,
    offset: Vec<T>,
    gamma: T,
    solver: BallSolver<T>,
}

const SECULAR_MAX_ITERS: usize = 200;
const SECULAR_TOL: f64 = 1e-14;

impl<T: Real> DefectBall<T> {
    /// Returns `None` when the defect does not depend on the ensemble.
    fn new(full: &RealMatrix<T>, offset: Vec<T>, gamma: T) -> Result<Option<Self>> {
        let coords: Vec<usize> =
            (0..full.cols).filter(|&c| (0..full.rows).any(|r| full[(r, c)] != T::zero())).collect();
        if coords.is_empty() {
            if vec_norm(&offset) > gamma {
                return Err(Error::InvalidSpec("constant defect exceeds gamma; set is empty".into()));
            }
            return Ok(None);
        }
        let mut l = RealMatrix::zeros(full.rows, coords.len());
        for r in 0..full.rows {
            for (k, &c) in coords.iter().enumerate() {
                l[(r, k)] = full[(r, c)];
            }
        }
        Self::with_coords(coords, l, offset, gamma).map(Some)
    }

    fn with_coords(coords: Vec<usize>, l: RealMatrix<T>, offset: Vec<T>, gamma: T) -> Result<Self> {
        let llt = l.gram_rows();
        let s = (0..llt.rows).fold(T::zero(), |a, i| a.max(llt[(i, i)]));
        let tight = llt.max_abs_diff(&RealMatrix::identity(llt.rows).scaled(s)) <= T::lit(1e-12) * s;
        let solver = if tight {
            BallSolver::Tight { s }
        } else {
            if vec_norm(&offset) != T::zero() {
                return Err(Error::InvalidSpec("non-tight affine defect map is not supported".into()));
            }
            BallSolver::Secular { eig: SymmetricEigen::new(&l.transpose().matmul(&l)) }
        };
        Ok(Self { coords, l, offset, gamma, solver })
    }

    fn gather(&self, x: &[T]) -> Vec<T> {
        self.coords.iter().map(|&c| x[c]).collect()
    }

    fn residual(&self, xs: &[T]) -> Vec<T> {
        self.l.matvec(xs).iter().zip(&self.offset).map(|(&a, &b)| a + b).collect()
    }

    fn defect_norm(&self, x: &[T]) -> T {
        vec_norm(&self.residual(&self.gather(x)))
    }

    /// Same quadratic `x ↦ ‖Lx + b‖²` as `other`: the two sets coincide.
    fn same_set(&self, other: &Self) -> bool {
        if self.coords != other.coords || self.gamma != other.gamma {
            return false;
        }
        let tol = T::lit(1e-12);
        let q1 = self.l.transpose().matmul(&self.l);
        let q2 = other.l.transpose().matmul(&other.l);
        let lin1 = self.l.tmatvec(&self.offset);
        let lin2 = other.l.tmatvec(&other.offset);
        let lin_diff = lin1.iter().zip(&lin2).fold(T::zero(), |a, (&p, &q)| a.max((p - q).abs()));
        q1.max_abs_diff(&q2) <= tol * (T::one() + q1.data.iter().fold(T::zero(), |a, &v| a.max(v.abs())))
            && lin_diff <= tol
            && (vec_norm(&self.offset) - vec_norm(&other.offset)).abs() <= tol
    }

    fn project_in_place(&self, x: &mut [T]) {
        let xs = self.gather(x);
        let r = self.residual(&xs);
        let rn = vec_norm(&r);
        if rn <= self.gamma {
            return;
        }
        let new = match &self.solver {
            BallSolver::Tight { s } => {
                let t = (rn - self.gamma) / rn;
                let corr = self.l.tmatvec(&r);
                xs.iter().zip(&corr).map(|(&v, &c)| v - t * c / *s).collect::<Vec<_>>()
            }
            BallSolver::Secular { eig } => secular_shrink(eig, &xs, self.gamma),
        };
        for (&c, v) in self.coords.iter().zip(new) {
            x[c] = v;
        }
    }
}

trait Scaled<T> {
    fn scaled(self, s: T) -> Self;
}

impl<T: Real> Scaled<T> for RealMatrix<T> {
    fn scaled(mut self, s: T) -> Self {
        self.data.iter_mut().for_each(|v| *v *= s);
        self
    }
}

/// Nearest point to `x` with `‖L·y‖ ≤ γ`, given the eigendecomposition of
/// `LᵀL = V·diag(σ²)·Vᵀ`. The minimizer is `(I + λLᵀL)⁻¹x` where `λ > 0` solves
/// `Σ σ_i² z_i² / (1 + λσ_i²)² = γ²` with `z = Vᵀx`.
fn secular_shrink<T: Real>(eig: &SymmetricEigen<T>, x: &[T], gamma: T) -> Vec<T> {
    let z = eig.to_basis(x);
    let sig2: Vec<T> = eig.values.iter().map(|&v| v.max(T::zero())).collect();
    let two = T::lit(2.0);
    let g2 = gamma * gamma;
    let eval = |lam: T| {
        let mut f = -g2;
        let mut df = T::zero();
        for (&s, &zi) in sig2.iter().zip(&z) {
            let den = T::one() + lam * s;
            let term = s * zi * zi / (den * den);
            f += term;
            df -= two * s * term / den;
        }
        (f, df)
    };
    let mut lo = T::zero();
    let mut hi = T::one();
    while eval(hi).0 > T::zero() {
        lo = hi;
        hi *= two;
        if !hi.is_finite() {
            break;
        }
    }
    let mut lam = (lo + hi) / two;
    let tol = T::lit(SECULAR_TOL);
    for _ in 0..SECULAR_MAX_ITERS {
        let (f, df) = eval(lam);
        if f > T::zero() {
            lo = lam;
        } else {
            hi = lam;
        }
        if f.abs() <= tol * g2 {
            break;
        }
        if hi - lo <= tol * hi {
            // land on the feasible side of the bracket
            lam = hi;
            break;
        }
        let newton = lam - f / df;
        lam = if df < T::zero() && newton > lo && newton < hi { newton } else { (lo + hi) / two };
    }
    let shrunk: Vec<T> = z.iter().zip(&sig2).map(|(&zi, &s)| zi / (T::one() + lam * s)).collect();
    eig.from_basis(&shrunk)
}

/// Balls acting on a common block of coordinates. A single ball is projected
/// exactly; overlapping distinct balls use Dykstra's alternating scheme.
#[derive(Clone, Debug)]
struct BallGroup<T> {
    balls: Vec<DefectBall<T>>,
}

const DYKSTRA_MAX_SWEEPS: usize = 100_000;

impl<T: Real> BallGroup<T> {
    fn project_in_place(&self, x: &mut [T]) {
        if self.balls.len() == 1 {
            self.balls[0].project_in_place(x);
            return;
        }
        if self.balls.iter().all(|b| b.defect_norm(x) <= b.gamma) {
            return;
        }
        let n = x.len();
        let mut incr = vec![vec![T::zero(); n]; self.balls.len()];
        let tol = T::epsilon() * T::lit(4.0);
        for _ in 0..DYKSTRA_MAX_SWEEPS {
            let mut change = T::zero();
            let mut scale = T::one();
            for (ball, p) in self.balls.iter().zip(incr.iter_mut()) {
                let mut y: Vec<T> = x.iter().zip(p.iter()).map(|(&a, &b)| a + b).collect();
                ball.project_in_place(&mut y);
                for k in 0..n {
                    let moved = x[k] + p[k] - y[k];
                    change = change.max((y[k] - x[k]).abs());
                    scale = scale.max(y[k].abs());
                    p[k] = moved;
                    x[k] = y[k];
                }
            }
            if change <= tol * scale {
                break;
            }
        }
    }
}

/// Near-symmetry or near-cardinality set, assembled from its per-sample
/// defect maps.
#[derive(Clone, Debug)]
struct NearPropertySet<T> {
    m: usize,
    groups: Vec<BallGroup<T>>,
    all: Vec<DefectBall<T>>,
}

impl<T: Real> NearPropertySet<T> {
    fn new(spec: &ProblemSpec<T>) -> Result<Self> {
        let m = spec.m;
        let mut balls = Vec::new();
        for defect in near_property_defects(spec) {
            let (mat, offset) = realify_affine(m, &*defect);
            if let Some(b) = DefectBall::new(&mat, offset, spec.gamma)? {
                balls.push(b);
            }
        }
        let all = balls.clone();

        // Group balls whose coordinate sets overlap, widen each to the union.
        let mut groups: Vec<(Vec<usize>, Vec<DefectBall<T>>)> = Vec::new();
        for b in balls {
            let mut merged = (b.coords.clone(), vec![b]);
            let mut rest = Vec::new();
            for g in groups.drain(..) {
                if g.0.iter().any(|c| merged.0.contains(c)) {
                    merged.0.extend(g.0);
                    merged.1.extend(g.1);
                } else {
                    rest.push(g);
                }
            }
            merged.0.sort_unstable();
            merged.0.dedup();
            rest.push(merged);
            groups = rest;
        }
        groups.sort_by_key(|g| g.0[0]);

        let mut out = Vec::new();
        for (coords, members) in groups {
            let mut widened: Vec<DefectBall<T>> = Vec::new();
            for b in members {
                let mut l = RealMatrix::zeros(b.l.rows, coords.len());
                for (k, &c) in b.coords.iter().enumerate() {
                    let pos = coords.binary_search(&c).expect("coordinate in union");
                    for r in 0..b.l.rows {
                        l[(r, pos)] = b.l[(r, k)];
                    }
                }
                let w = DefectBall::with_coords(coords.clone(), l, b.offset.clone(), b.gamma)?;
                if !widened.iter().any(|o| o.same_set(&w)) {
                    widened.push(w);
                }
            }
            out.push(BallGroup { balls: widened });
        }
        Ok(Self { m, groups: out, all })
    }

    fn project(&self, e: &Ensemble<T>) -> Ensemble<T> {
        let mut x = e.free_coords();
        for g in &self.groups {
            g.project_in_place(&mut x);
        }
        Ensemble::from_free_coords(self.m, &x).expect("same size")
    }

    fn defects(&self, e: &Ensemble<T>) -> Vec<T> {
        let x = e.free_coords();
        self.all.iter().map(|b| b.defect_norm(&x)).collect()
    }
}

/// Per-sample defect maps of the near-property set, `j = 1 … M/2`.
fn near_property_defects<T: Real>(spec: &ProblemSpec<T>) -> Vec<Defect<T>> {
    let h = spec.m / 2;
    let m = spec.m;
    (1..=h)
        .map(|j| -> Defect<T> {
            match spec.kind {
                ProblemKind::Symmetric => {
                    let c = spec.symmetry_phase(j);
                    match spec.scope {
                        SymmetryScope::ScalingFilter => Box::new(move |e: &Ensemble<T>| {
                            vec![e.full_view(j).a11 - c * e.full_view(m - j).a11]
                        }),
                        SymmetryScope::FullMatrix => Box::new(move |e: &Ensemble<T>| {
                            (e.full_view(j) - e.full_view(m - j).k_conjugate().scale_c(c)).entries().to_vec()
                        }),
                    }
                }
                ProblemKind::Cardinal => {
                    let p = spec.cardinal_point();
                    let sign = if p.rem_euclid(2) == 0 { T::one() } else { -T::one() };
                    let target: Complex<T> = unit_root(p * j as i64, m);
                    Box::new(move |e: &Ensemble<T>| {
                        vec![e.full_view(j).a11 + e.full_view(j + h).a11 * sign - target]
                    })
                }
            }
        })
        .collect()
}

/// Regularity functionals `L_ℓ(E) = Σ_k α_{ℓk}·U_k[1,2]`, `0 ≤ ℓ ≤ D`, with
/// `α_{ℓk} = Σ_j j^ℓ e^{−2πikj/M}`.
#[derive(Clone, Debug)]
pub struct RegularityMap<T> {
    pub alpha: Vec<Vec<Complex<T>>>,
    /// Real matrix of shape `2(D+1) × 4M` on free coordinates.
    pub matrix: RealMatrix<T>,
}

impl<T: Real> RegularityMap<T> {
    pub fn new(m: usize, d: usize) -> Self {
        let alpha: Vec<Vec<Complex<T>>> = (0..=d)
            .map(|l| {
                (0..m)
                    .map(|k| {
                        (0..m).fold(Complex::zero(), |acc, j| {
                            let w = T::from_usize_lossy(j).powi(l as i32);
                            let w = if l == 0 { T::one() } else { w };
                            acc + unit_root::<T>(-((k * j) as i64), m) * w
                        })
                    })
                    .collect()
            })
            .collect();
        let a = alpha.clone();
        let (matrix, _) = realify_affine(m, &move |e: &Ensemble<T>| evaluate_regularity(&a, e));
        Self { alpha, matrix }
    }

    pub fn evaluate(&self, e: &Ensemble<T>) -> Vec<Complex<T>> {
        evaluate_regularity(&self.alpha, e)
    }
}

fn evaluate_regularity<T: Real>(alpha: &[Vec<Complex<T>>], e: &Ensemble<T>) -> Vec<Complex<T>> {
    alpha
        .iter()
        .map(|row| row.iter().enumerate().fold(Complex::zero(), |acc, (k, &a)| acc + a * e.full_view(k).a12))
        .collect()
}

/// Singular values of the regularity Gram matrix below this fraction of the
/// largest signal redundant rows.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
struct RegularityProjector<T> {
    map: RegularityMap<T>,
    gram: SymmetricEigen<T>,
}

impl<T: Real> RegularityProjector<T> {
    fn new(m: usize, d: usize) -> Result<Self> {
        let map = RegularityMap::new(m, d);
        let gram: SymmetricEigen<T> = SymmetricEigen::new(&map.matrix.gram_rows());
        let ratio = gram.min_value() / gram.max_value();
        if !(ratio >= T::lit(RANK_TOL)) {
            return Err(Error::RankDeficiency { ratio: ratio.to_f64_lossy() });
        }
        Ok(Self { map, gram })
    }

    fn project(&self, e: &Ensemble<T>) -> Ensemble<T> {
        let x = e.free_coords();
        let ax = self.map.matrix.matvec(&x);
        let y = self.gram.solve(&ax);
        let corr = self.map.matrix.tmatvec(&y);
        let out: Vec<T> = x.iter().zip(&corr).map(|(&a, &c)| a - c).collect();
        Ensemble::from_free_coords(e.m(), &out).expect("same size")
    }
}

/// Projections onto the constraint sets for one problem specification.
///
/// Construction validates the spec and precomputes the regularity Gram
/// factorization and the near-property defect maps; afterwards every
/// projection is infallible and the value may be shared across threads.
#[derive(Clone, Debug)]
pub struct WaveletSets<T: Real> {
    spec: ProblemSpec<T>,
    regularity: RegularityProjector<T>,
    near: NearPropertySet<T>,
}

/// Below this modulus the phase of `U_0[2,2]` is taken to be 1.
const PHASE_FLOOR: f64 = 1e-14;

impl<T: Real> WaveletSets<T> {
    pub fn new(spec: ProblemSpec<T>) -> Result<Self> {
        spec.validate()?;
        let regularity = RegularityProjector::new(spec.m, spec.d)?;
        let near = NearPropertySet::new(&spec)?;
        Ok(Self { spec, regularity, near })
    }

    pub fn spec(&self) -> &ProblemSpec<T> {
        &self.spec
    }

    pub fn regularity_map(&self) -> &RegularityMap<T> {
        &self.regularity.map
    }

    fn check(&self, e: &Ensemble<T>) {
        assert_eq!(e.m(), self.spec.m, "ensemble size does not match the problem");
    }

    /// `U_0 = diag(1, z)` with `|z| = 1`, and unitary free samples.
    pub fn project_b1(&self, e: &Ensemble<T>) -> Ensemble<T> {
        self.check(e);
        e.map_free(|j, a| {
            if j == 0 {
                let r = a.a22.norm();
                let z = if r < T::lit(PHASE_FLOOR) { Complex::one() } else { a.a22 / r };
                Mat2::diag(Complex::one(), z)
            } else {
                polar_unitary(a)
            }
        })
    }

    /// Unitary samples at the half-shifted nodes `(j + 1/2)/M`.
    pub fn project_b2(&self, e: &Ensemble<T>) -> Ensemble<T> {
        self.check(e);
        e.half_shift().map_free(|_, a| polar_unitary(a)).half_shift_inverse()
    }

    /// Vanishing regularity functionals.
    pub fn project_b3(&self, e: &Ensemble<T>) -> Ensemble<T> {
        self.check(e);
        self.regularity.project(e)
    }

    /// Real-valued filters: `U_j = conj(U_{M−j})`.
    pub fn project_b4(&self, e: &Ensemble<T>) -> Ensemble<T> {
        self.check(e);
        let s = conjugate_mirror(e);
        let half = T::lit(0.5);
        e.lin_comb(half, &s, half)
    }

    /// `P_{B3}·P_{B4}`, which equals the projection onto `B3 ∩ B4` because
    /// `B3` is invariant under the mirror used by `B4`.
    pub fn project_b34(&self, e: &Ensemble<T>) -> Ensemble<T> {
        self.project_b3(&self.project_b4(e))
    }

    /// Projection onto the closure of the near-symmetry or near-cardinality
    /// set selected by the spec.
    pub fn project_b5(&self, e: &Ensemble<T>) -> Ensemble<T> {
        self.check(e);
        self.near.project(e)
    }

    /// Per-sample near-property defect norms, `j = 1 … M/2` (samples whose
    /// defect is identically zero are omitted).
    pub fn near_property_defects(&self, e: &Ensemble<T>) -> Vec<T> {
        self.near.defects(e)
    }

    /// Largest amount by which a near-property defect exceeds `γ`.
    pub fn near_property_excess(&self, e: &Ensemble<T>) -> T {
        self.near_property_defects(e)
            .into_iter()
            .fold(T::zero(), |acc, d| acc.max(d - self.spec.gamma))
    }

    pub fn project_v(&self, x: &ProductPoint<T>) -> ProductPoint<T> {
        let [a, b, c, d] = &x.parts;
        ProductPoint::new([self.project_b1(a), self.project_b2(b), self.project_b34(c), self.project_b5(d)])
    }
}

/// `σ(E)_j = conj(U_{(M−j) mod M})`, an isometric involution that preserves
/// consistency.
pub fn conjugate_mirror<T: Real>(e: &Ensemble<T>) -> Ensemble<T> {
    let m = e.m();
    e.map_free(|j, _| e.full_view(m - j).conj())
}

/// Projection onto the diagonal: every part replaced by the mean.
pub fn project_w<T: Real>(x: &ProductPoint<T>) -> ProductPoint<T> {
    ProductPoint::diagonal(&x.mean())
}

/// `2·P(x) − x`.
pub fn reflect<T: Real, P: Point<T>>(project: impl Fn(&P) -> P, x: &P) -> P {
    project(x).lin_comb(T::lit(2.0), x, -T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    fn sym() -> WaveletSets<f64> {
        WaveletSets::new(ProblemSpec::symmetric()).unwrap()
    }

    fn card() -> WaveletSets<f64> {
        WaveletSets::new(ProblemSpec::cardinal()).unwrap()
    }

    fn dist(a: &Ensemble<f64>, b: &Ensemble<f64>) -> f64 {
        a.distance(b)
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> Mat2<f64> {
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (a, b) = (c(v[0] / n, v[1] / n), c(v[2] / n, v[3] / n));
        let ph = C::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        Mat2::new(a, -b.conj(), b, a.conj()).scale_c(ph)
    }

    /// Orthonormal basis of the row space by modified Gram-Schmidt.
    fn row_basis(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for r in rows {
            let mut v = r.clone();
            for _ in 0..2 {
                for q in &basis {
                    let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
                }
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-9 {
                basis.push(v.into_iter().map(|x| x / n).collect());
            }
        }
        basis
    }

    fn remove_span(x: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
        let mut y = x.to_vec();
        for q in basis {
            let d: f64 = y.iter().zip(q).map(|(a, b)| a * b).sum();
            y.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        y
    }

    fn matrix_rows(m: &RealMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.rows).map(|r| m.row(r).to_vec()).collect()
    }

    #[test]
    fn spec_validation() {
        assert!(ProblemSpec::<f64>::symmetric().validate().is_ok());
        assert!(ProblemSpec::<f64>::cardinal().validate().is_ok());
        let bad = [
            ProblemSpec { m: 5, ..ProblemSpec::symmetric() },
            ProblemSpec { d: 3, ..ProblemSpec::symmetric() },
            ProblemSpec { gamma: 0.0, ..ProblemSpec::symmetric() },
            ProblemSpec { p: 5.0, ..ProblemSpec::symmetric() },
            ProblemSpec { p: 1.5, ..ProblemSpec::cardinal() },
        ];
        for s in bad {
            assert!(matches!(WaveletSets::new(s), Err(Error::InvalidSpec(_))));
        }
        let json = serde_json::to_string(&ProblemSpec::<f64>::symmetric()).unwrap();
        assert_eq!(
            json,
            r#"{"M":6,"D":1,"gamma":0.5,"P":2.0,"kind":"symmetric","phase":"four_pi","scope":"scaling_filter"}"#
        );
    }

    #[test]
    fn b1_examples() {
        let s = sym();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_unitary(&mut rng);
        let mut e = Ensemble::random(6, 0).unwrap();
        e.free_mut()[0] = Mat2::new(c(5.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 3.0));
        e.free_mut()[1] = q.scale(2.0);
        let p = s.project_b1(&e);
        assert!((p.free()[0] - Mat2::diag(c(1.0, 0.0), c(0.0, 1.0))).norm() < 1e-15);
        assert!((p.free()[1] - q).norm() < 1e-14);
        assert!(dist(&s.project_b1(&p), &p) < 1e-14);
        // zero corner entry takes phase 1
        e.free_mut()[0] = Mat2::zero();
        assert_eq!(s.project_b1(&e).free()[0], Mat2::identity());
    }

    #[test]
    fn b2_output_is_unitary_after_shift() {
        let s = sym();
        for seed in 0..10 {
            let p = s.project_b2(&Ensemble::random(6, seed).unwrap());
            for u in p.half_shift().full_samples() {
                assert!(u.unitarity_defect() < 1e-12);
            }
            assert!(dist(&s.project_b2(&p), &p) < 1e-12);
            let tripled = p.scaled(3.0);
            assert!(dist(&s.project_b2(&tripled), &p) < 1e-12);
        }
    }

    #[test]
    fn b1_b2_beat_random_members() {
        let s = sym();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20 {
            let e = Ensemble::random(6, seed).unwrap();
            let (p1, p2) = (s.project_b1(&e), s.project_b2(&e));
            for _ in 0..200 {
                let z = C::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                let mut free = vec![Mat2::diag(c(1.0, 0.0), z)];
                free.extend((1..3).map(|_| random_unitary(&mut rng)));
                let m1 = Ensemble::from_free(free).unwrap();
                assert!(dist(&e, &p1) <= dist(&e, &m1) + 1e-8);
                let shifted = Ensemble::from_free((0..3).map(|_| random_unitary(&mut rng)).collect()).unwrap();
                let m2 = shifted.half_shift_inverse();
                assert!(dist(&e, &p2) <= dist(&e, &m2) + 1e-8);
            }
        }
    }

    #[test]
    fn regularity_coefficients() {
        let map = RegularityMap::<f64>::new(6, 1);
        assert!((map.alpha[0][0] - c(6.0, 0.0)).norm() < 1e-12);
        for k in 1..6 {
            assert!(map.alpha[0][k].norm() < 1e-12);
        }
        assert!((map.alpha[1][0] - c(15.0, 0.0)).norm() < 1e-12);
        assert_eq!((map.matrix.rows, map.matrix.cols), (4, 24));
    }

    #[test]
    fn b3_matches_null_space_oracle() {
        let s = sym();
        let basis = row_basis(&matrix_rows(&s.regularity_map().matrix));
        for seed in 0..10 {
            let e = Ensemble::random(6, seed).unwrap();
            let p = s.project_b3(&e);
            assert!(s.regularity_map().evaluate(&p).iter().all(|z| z.norm() < 1e-10));
            let oracle = remove_span(&e.free_coords(), &basis);
            let got = p.free_coords();
            assert!(oracle.iter().zip(&got).all(|(a, b)| (a - b).abs() < 1e-10));
            assert!(dist(&s.project_b3(&p), &p) < 1e-12);
        }
    }

    #[test]
    fn b4_is_a_symmetric_average() {
        let s = sym();
        let e = Ensemble::random(6, 2).unwrap();
        let p = s.project_b4(&e);
        assert!(dist(&conjugate_mirror(&p), &p) < 1e-14);
        assert!((p.norm_sqr() + e.minus(&p).norm_sqr() - e.norm_sqr()).abs() < 1e-12);
        let anti = e.minus(&conjugate_mirror(&e));
        assert!(s.project_b4(&anti).norm() < 1e-14);
    }

    #[test]
    fn b34_matches_joint_oracle() {
        let s = sym();
        let mut rows = matrix_rows(&s.regularity_map().matrix);
        let (mirror, _) = realify_affine(6, &|e: &Ensemble<f64>| {
            let d = e.minus(&conjugate_mirror(e));
            d.free().iter().flat_map(|a| a.entries().to_vec()).collect()
        });
        rows.extend(matrix_rows(&mirror));
        let basis = row_basis(&rows);
        for seed in 0..10 {
            let e = Ensemble::random(6, 100 + seed).unwrap();
            let p = s.project_b34(&e);
            let oracle = remove_span(&e.free_coords(), &basis);
            assert!(oracle.iter().zip(p.free_coords()).all(|(a, b)| (a - b).abs() < 1e-10));
            assert!(dist(&conjugate_mirror(&p), &p) < 1e-10);
        }
    }

    #[test]
    fn scalar_ball_lagrange_example() {
        // |u1 + u2| <= 0.5 from (1, 0)
        let l = RealMatrix::<f64>::from_rows(&[vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]]);
        let ball = DefectBall::new(&l, vec![0.0, 0.0], 0.5).unwrap().unwrap();
        let mut x = vec![1.0, 0.0, 0.0, 0.0];
        ball.project_in_place(&mut x);
        let want = [0.75f64, 0.0, -0.25, 0.0];
        assert!(x.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!((ball.defect_norm(&x) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn secular_solver_hits_the_boundary() {
        // non-tight map: row norms differ
        let l = RealMatrix::<f64>::from_rows(&[vec![2.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]);
        let ball = DefectBall::new(&l, vec![0.0, 0.0], 0.5).unwrap().unwrap();
        assert!(matches!(ball.solver, BallSolver::Secular { .. }));
        let mut x = vec![1.0, -2.0, 0.5];
        let orig = x.clone();
        ball.project_in_place(&mut x);
        assert!((ball.defect_norm(&x) - 0.5).abs() < 1e-12);
        // KKT: x0 - x = λ Lᵀ L x with λ >= 0
        let r = l.matvec(&x);
        let g = l.tmatvec(&r);
        let diff: Vec<f64> = orig.iter().zip(&x).map(|(a, b)| a - b).collect();
        let lam = diff.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() / g.iter().map(|v| v * v).sum::<f64>();
        assert!(lam > 0.0);
        assert!(diff.iter().zip(&g).all(|(d, gi)| (d - lam * gi).abs() < 1e-10));
    }

    #[test]
    fn b5_defects_land_inside_closure() {
        for sets in [sym(), card()] {
            for seed in 0..20 {
                let e = Ensemble::random(6, seed).unwrap().scaled(2.0);
                let p = sets.project_b5(&e);
                assert!(sets.near_property_defects(&p).iter().all(|&d| d <= 0.5 + 1e-12));
                assert!(dist(&sets.project_b5(&p), &p) < 1e-12);
                assert!(sets.near_property_excess(&p) <= 1e-12);
            }
        }
    }

    #[test]
    fn b5_card_moves_two_entries() {
        let s = card();
        let mut e = Ensemble::random(6, 9).unwrap();
        let before = e.clone();
        e = s.project_b5(&e);
        for (a, b) in e.free().iter().zip(before.free()) {
            assert_eq!((a.a12, a.a22), (b.a12, b.a22));
        }
        // inside points are fixed
        let inside = s.project_b5(&e);
        assert!(dist(&inside, &e) < 1e-15);
    }

    #[test]
    fn full_matrix_scope_projects_at_half_integer_centre() {
        let spec = ProblemSpec { p: 1.5, scope: SymmetryScope::FullMatrix, ..ProblemSpec::symmetric() };
        let s = WaveletSets::new(spec).unwrap();
        let e = Ensemble::random(6, 4).unwrap();
        let p = s.project_b5(&e);
        assert!(s.near_property_defects(&p).iter().all(|&d| d <= 0.5 + 1e-9));
    }

    #[test]
    fn convex_projections_are_firmly_nonexpansive() {
        let (s, k) = (sym(), card());
        let projections: Vec<Box<dyn Fn(&Ensemble<f64>) -> Ensemble<f64>>> = vec![
            Box::new(|e| s.project_b3(e)),
            Box::new(|e| s.project_b4(e)),
            Box::new(|e| s.project_b34(e)),
            Box::new(|e| s.project_b5(e)),
            Box::new(|e| k.project_b5(e)),
        ];
        for p in &projections {
            for seed in 0..20 {
                let x = Ensemble::random(6, seed).unwrap().scaled(1.5);
                let y = Ensemble::random(6, 1000 + seed).unwrap();
                let d = p(&x).minus(&p(&y));
                assert!(d.norm_sqr() <= d.inner(&x.minus(&y)) + 1e-10);
            }
        }
    }

    #[test]
    fn product_projections() {
        let s = sym();
        let parts = |i: u64| Ensemble::random(6, i).unwrap();
        let x = ProductPoint::new([parts(0), parts(1), parts(2), parts(3)]);
        let pv = s.project_v(&x);
        let parts_sq: f64 = [
            s.project_b1(&x.parts[0]).minus(&x.parts[0]),
            s.project_b2(&x.parts[1]).minus(&x.parts[1]),
            s.project_b34(&x.parts[2]).minus(&x.parts[2]),
            s.project_b5(&x.parts[3]).minus(&x.parts[3]),
        ]
        .iter()
        .map(|d| d.norm_sqr())
        .sum();
        assert!((pv.minus(&x).norm_sqr() - parts_sq).abs() < 1e-12);
        assert!(s.project_v(&pv).distance(&pv) < 1e-12);

        let (e, f) = (parts(4), parts(5));
        let neg = e.scaled(-1.0);
        let alt = ProductPoint::new([e.clone(), neg.clone(), e.clone(), neg]);
        assert!(project_w(&alt).norm() < 1e-15);
        let ef = ProductPoint::new([e.clone(), f.clone(), e.clone(), f.clone()]);
        let fe = ProductPoint::new([f.clone(), e.clone(), f, e]);
        assert!(reflect(project_w, &ef).distance(&fe) < 1e-14);
        let pw = project_w(&x);
        let diag = ProductPoint::diagonal(&parts(6));
        assert!(x.minus(&pw).inner(&diag).abs() < 1e-12);
        let rr = reflect(project_w, &reflect(project_w, &x));
        assert!(rr.distance(&x) < 1e-12);
    }
}
