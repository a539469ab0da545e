use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// A 2×2 complex matrix, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2<T> {
    pub a11: Complex<T>,
    pub a12: Complex<T>,
    pub a21: Complex<T>,
    pub a22: Complex<T>,
}

impl<T: Real> Mat2<T> {
    pub fn new(a11: Complex<T>, a12: Complex<T>, a21: Complex<T>, a22: Complex<T>) -> Self {
        Self { a11, a12, a21, a22 }
    }

    /// Builds a matrix from real entries.
    pub fn real(a11: T, a12: T, a21: T, a22: T) -> Self {
        let c = |v| Complex::new(v, T::zero());
        Self::new(c(a11), c(a12), c(a21), c(a22))
    }

    pub fn zero() -> Self {
        Self::new(Complex::zero(), Complex::zero(), Complex::zero(), Complex::zero())
    }

    pub fn identity() -> Self {
        Self::new(Complex::one(), Complex::zero(), Complex::zero(), Complex::one())
    }

    pub fn diag(d1: Complex<T>, d2: Complex<T>) -> Self {
        Self::new(d1, Complex::zero(), Complex::zero(), d2)
    }

    /// Entries in row-major order `(a11, a12, a21, a22)`.
    pub fn entries(&self) -> [Complex<T>; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn from_entries(e: [Complex<T>; 4]) -> Self {
        Self::new(e[0], e[1], e[2], e[3])
    }

    pub fn entries_mut(&mut self) -> [&mut Complex<T>; 4] {
        [&mut self.a11, &mut self.a12, &mut self.a21, &mut self.a22]
    }

    /// Entry at zero-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries()[2 * row + col]
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self::new(f(self.a11), f(self.a12), f(self.a21), f(self.a22))
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        Self::new(
            f(self.a11, other.a11),
            f(self.a12, other.a12),
            f(self.a21, other.a21),
            f(self.a22, other.a22),
        )
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    /// Entrywise conjugate.
    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::new(self.a11.conj(), self.a21.conj(), self.a12.conj(), self.a22.conj())
    }

    pub fn det(&self) -> Complex<T> {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    /// Classical adjugate: `adj(A)·A = det(A)·I`.
    pub fn adjugate(&self) -> Self {
        Self::new(self.a22, -self.a12, -self.a21, self.a11)
    }

    /// `J·A`: swaps the two rows.
    pub fn row_swap(&self) -> Self {
        Self::new(self.a21, self.a22, self.a11, self.a12)
    }

    /// `K·A·K` with `K = diag(-1, 1)`: negates the off-diagonal entries.
    pub fn k_conjugate(&self) -> Self {
        Self::new(self.a11, -self.a12, -self.a21, self.a22)
    }

    pub fn norm_sqr(&self) -> T {
        self.entries().iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Real inner product `Re Σ a_pq · conj(b_pq)`.
    pub fn inner(&self, other: &Self) -> T {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .fold(T::zero(), |acc, (a, b)| acc + a.re * b.re + a.im * b.im)
    }

    /// Frobenius distance of `A·A*` from the identity.
    pub fn unitarity_defect(&self) -> T {
        (*self * self.adjoint() - Self::identity()).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, r: Self) -> Self {
        Self::new(
            self.a11 * r.a11 + self.a12 * r.a21,
            self.a11 * r.a12 + self.a12 * r.a22,
            self.a21 * r.a11 + self.a22 * r.a21,
            self.a21 * r.a12 + self.a22 * r.a22,
        )
    }
}

/// Nearest unitary matrix in Frobenius norm (the unitary polar factor).
///
/// For a 2×2 matrix with SVD `A = U·diag(s1, s2)·V*` the polar factor is
/// `U·V* = (A + e^{iθ}·adj(A)*) / (s1 + s2)` where `θ = arg det A`. When `A`
/// is numerically singular the minimizer is not unique; the phase `e^{iθ}` is
/// then fixed to 1, which selects the minimizer with determinant 1.
pub fn polar_unitary<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    let scale_sqr = a.norm_sqr();
    if !(scale_sqr > T::zero()) || !a.is_finite() {
        return Mat2::identity();
    }
    let det = a.det();
    let det_abs = det.norm();
    let phase = if det_abs <= T::lit(1e-14) * scale_sqr {
        Complex::one()
    } else {
        det / det_abs
    };
    let x = *a + a.adjugate().adjoint().scale_c(phase);
    // ‖x‖_F = √2 (s1 + s2)
    x.scale(T::SQRT_2() / x.norm())
}
