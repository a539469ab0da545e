use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A vector in a real Hilbert space.
///
/// Complex-valued data is realified: the inner product is `Re Σ x_i·conj(y_i)`.
pub trait Point<T: Real>: Clone {
    fn inner(&self, other: &Self) -> T;

    /// `a·self + b·other`.
    fn lin_comb(&self, a: T, other: &Self, b: T) -> Self;

    fn norm_sqr(&self) -> T {
        self.inner(self)
    }

    fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    fn plus(&self, other: &Self) -> Self {
        self.lin_comb(T::one(), other, T::one())
    }

    fn minus(&self, other: &Self) -> Self {
        self.lin_comb(T::one(), other, -T::one())
    }

    fn scaled(&self, a: T) -> Self {
        self.lin_comb(a, self, T::zero())
    }

    fn distance(&self, other: &Self) -> T {
        self.minus(other).norm()
    }
}

/// Flat coordinate vector of complex scalars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint<T> {
    pub coords: Vec<Complex<T>>,
}

impl<T: Real> HPoint<T> {
    pub fn new(coords: Vec<Complex<T>>) -> Self {
        Self { coords }
    }

    pub fn from_real(values: &[T]) -> Self {
        Self::new(values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![Complex::new(T::zero(), T::zero()); dim])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl<T: Real> Point<T> for HPoint<T> {
    fn inner(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (x, y)| acc + x.re * y.re + x.im * y.im)
    }

    fn lin_comb(&self, a: T, other: &Self, b: T) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        )
    }
}

pub const DEFAULT_COLINEAR_TOL: f64 = 1e-12;

/// Whether `x`, `y`, `z` lie on a common line (or coincide).
///
/// With `u = y − x` and `v = z − x` this is `‖u‖‖v‖ = 0` or
/// `⟨u,v⟩² ≥ (1 − tol)·‖u‖²‖v‖²`.
pub fn colinear<T: Real, P: Point<T>>(x: &P, y: &P, z: &P, tol: T) -> bool {
    let u = y.minus(x);
    let v = z.minus(x);
    let uu = u.norm_sqr();
    let vv = v.norm_sqr();
    if uu == T::zero() || vv == T::zero() {
        return true;
    }
    let uv = u.inner(&v);
    uv * uv >= (T::one() - tol) * uu * vv
}

/// Circumcenter of three points: the point of their affine span equidistant
/// from all three. Fails on colinear triples (tolerance
/// [`DEFAULT_COLINEAR_TOL`]).
pub fn circumcenter<T: Real, P: Point<T>>(x: &P, y: &P, z: &P) -> Result<P> {
    circumcenter_with_tol(x, y, z, T::lit(DEFAULT_COLINEAR_TOL))
}

pub fn circumcenter_with_tol<T: Real, P: Point<T>>(x: &P, y: &P, z: &P, tol: T) -> Result<P> {
    if colinear(x, y, z, tol) {
        return Err(Error::DegenerateTriple);
    }
    let u = y.minus(x);
    let v = z.minus(x);
    let uu = u.norm_sqr();
    let uv = u.inner(&v);
    // w = v with its u-component removed, formed explicitly so that
    // ‖w‖² does not come from cancellation
    let w = v.lin_comb(T::one(), &u, -uv / uu);
    let ww = w.norm_sqr();
    let half = T::lit(0.5);
    let eta = (v.norm_sqr() - uv) * half / ww;
    let offset = u.lin_comb(half, &w, eta);
    Ok(x.plus(&offset))
}
