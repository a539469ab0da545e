//! The sampled wavelet-matrix space.
//!
//! An [`Ensemble`] holds the `M` uniform samples `U_j = U(j/M)` of the 2×2
//! wavelet matrix. Only the first `M/2` samples are stored; the second half is
//! generated by the consistency relation `U_{j+M/2} = J·U_j`, so every value of
//! this type is consistent by construction.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::{HPoint, Mat2, Point};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative tolerance for accepting synthesized samples as consistent.
pub const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleRepr<T>", into = "EnsembleRepr<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Ensemble<T: Real> {
    m: usize,
    free: Vec<Mat2<T>>,
}

/// `e^{2πi·num/den}` with the numerator reduced first.
pub(crate) fn unit_root<T: Real>(num: i64, den: usize) -> Complex<T> {
    let d = den as i64;
    let r = num.rem_euclid(d);
    let theta = T::TAU() * T::lit(r as f64) / T::from_usize_lossy(den);
    Complex::from_polar(T::one(), theta)
}

fn check_size(m: usize) -> Result<()> {
    if m < 4 || m % 2 != 0 {
        return Err(Error::InvalidSpec(format!("M must be even and at least 4, got {m}")));
    }
    Ok(())
}

impl<T: Real> Ensemble<T> {
    /// Builds an ensemble from its `M/2` free samples `U_0 … U_{M/2−1}`.
    pub fn from_free(free: Vec<Mat2<T>>) -> Result<Self> {
        let m = 2 * free.len();
        check_size(m)?;
        Ok(Self { m, free })
    }

    /// Builds an ensemble from all `M` samples, rejecting inputs that violate
    /// `U_{j+M/2} = J·U_j` beyond [`CONSISTENCY_TOL`] (relative).
    pub fn from_full(samples: &[Mat2<T>]) -> Result<Self> {
        let m = samples.len();
        check_size(m)?;
        let h = m / 2;
        let scale = samples.iter().fold(T::zero(), |a, s| a + s.norm_sqr()).sqrt();
        let dev = (0..h)
            .map(|j| (samples[j + h] - samples[j].row_swap()).norm())
            .fold(T::zero(), T::max);
        let rel = dev / (T::one() + scale);
        if rel > T::lit(CONSISTENCY_TOL) {
            return Err(Error::InconsistentCoefficients { deviation: rel.to_f64_lossy() });
        }
        Self::from_free(samples[..h].to_vec())
    }

    pub fn zeros(m: usize) -> Result<Self> {
        check_size(m)?;
        Ok(Self { m, free: vec![Mat2::zero(); m / 2] })
    }

    /// Ensemble with every free entry drawn independently: real and imaginary
    /// parts standard normal, from a ChaCha8 stream seeded by `seed`.
    pub fn random(m: usize, seed: u64) -> Result<Self> {
        check_size(m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(T::lit(re), T::lit(im))
        };
        let free = (0..m / 2)
            .map(|_| {
                let a11 = draw();
                let a12 = draw();
                let a21 = draw();
                let a22 = draw();
                Mat2::new(a11, a12, a21, a22)
            })
            .collect();
        Ok(Self { m, free })
    }

    /// Number of samples `M`.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn half(&self) -> usize {
        self.m / 2
    }

    pub fn free(&self) -> &[Mat2<T>] {
        &self.free
    }

    pub fn free_mut(&mut self) -> &mut [Mat2<T>] {
        &mut self.free
    }

    /// Sample `U_j`, index taken mod `M`.
    pub fn full_view(&self, j: usize) -> Mat2<T> {
        let h = self.half();
        let j = j % self.m;
        if j < h {
            self.free[j]
        } else {
            self.free[j - h].row_swap()
        }
    }

    pub fn full_samples(&self) -> Vec<Mat2<T>> {
        (0..self.m).map(|j| self.full_view(j)).collect()
    }

    /// Flattens the full `M`-sample view, entries row-major per sample.
    pub fn to_hpoint(&self) -> HPoint<T> {
        HPoint::new(self.full_samples().iter().flat_map(Mat2::entries).collect())
    }

    /// Real coordinates of the free samples: `[re…, im…]` over entries in
    /// row-major order, sample by sample. Euclidean norm on these is
    /// `1/√2` times the ensemble norm.
    pub fn free_coords(&self) -> Vec<T> {
        let n = 4 * self.free.len();
        let mut out = vec![T::zero(); 2 * n];
        for (s, mat) in self.free.iter().enumerate() {
            for (e, z) in mat.entries().iter().enumerate() {
                out[4 * s + e] = z.re;
                out[n + 4 * s + e] = z.im;
            }
        }
        out
    }

    pub fn from_free_coords(m: usize, coords: &[T]) -> Result<Self> {
        check_size(m)?;
        let n = 2 * m;
        if coords.len() != 2 * n {
            return Err(Error::SizeMismatch { expected: 2 * n, found: coords.len() });
        }
        let free = (0..m / 2)
            .map(|s| {
                let e = |k: usize| Complex::new(coords[4 * s + k], coords[n + 4 * s + k]);
                Mat2::new(e(0), e(1), e(2), e(3))
            })
            .collect();
        Ok(Self { m, free })
    }

    pub fn map_free(&self, f: impl Fn(usize, &Mat2<T>) -> Mat2<T>) -> Self {
        Self { m: self.m, free: self.free.iter().enumerate().map(|(j, a)| f(j, a)).collect() }
    }

    /// Analysis transform `A_k = (1/M) Σ_j U_j e^{−2πijk/M}`.
    pub fn dft(&self) -> CoeffSeq<T> {
        let m = self.m;
        let samples = self.full_samples();
        let inv_m = T::one() / T::from_usize_lossy(m);
        let coeffs = (0..m)
            .map(|k| {
                samples
                    .iter()
                    .enumerate()
                    .fold(Mat2::zero(), |acc, (j, u)| {
                        acc + u.scale_c(unit_root(-((j * k) as i64), m))
                    })
                    .scale(inv_m)
            })
            .collect();
        CoeffSeq { coeffs }
    }

    /// Samples of the interpolating trigonometric polynomial at the
    /// half-shifted nodes `(j + 1/2)/M`.
    pub fn half_shift(&self) -> Self {
        self.shift_by(1)
    }

    /// Inverse of [`Self::half_shift`].
    pub fn half_shift_inverse(&self) -> Self {
        self.shift_by(-1)
    }

    fn shift_by(&self, dir: i64) -> Self {
        let m = self.m;
        let coeffs = self.dft().coeffs;
        // modulation by e^{±πik/M} = e^{±2πik/(2M)}
        let h = self.half();
        let free = (0..h)
            .map(|j| {
                coeffs.iter().enumerate().fold(Mat2::zero(), |acc, (k, a)| {
                    let k = k as i64;
                    let ph = unit_root::<T>(dir * k + 2 * (j as i64) * k, 2 * m);
                    acc + a.scale_c(ph)
                })
            })
            .collect();
        Self { m, free }
    }

    fn check_same_size(&self, other: &Self) {
        assert_eq!(self.m, other.m, "ensembles of different sizes");
    }
}

impl<T: Real> Point<T> for Ensemble<T> {
    /// Full-view inner product; `J` is unitary so each free sample counts twice.
    fn inner(&self, other: &Self) -> T {
        self.check_same_size(other);
        let s = self.free.iter().zip(&other.free).fold(T::zero(), |acc, (a, b)| acc + a.inner(b));
        s + s
    }

    fn lin_comb(&self, a: T, other: &Self, b: T) -> Self {
        self.check_same_size(other);
        Self {
            m: self.m,
            free: self.free.iter().zip(&other.free).map(|(x, y)| x.scale(a) + y.scale(b)).collect(),
        }
    }
}

/// Coefficient matrices `A_0 … A_{M−1}` of `U(ξ) = Σ A_k e^{2πikξ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSeq<T> {
    pub coeffs: Vec<Mat2<T>>,
}

impl<T: Real> CoeffSeq<T> {
    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    /// Synthesis `U_j = Σ_k A_k e^{2πijk/M}`; the reconstructed samples must
    /// satisfy the consistency relation.
    pub fn idft(&self) -> Result<Ensemble<T>> {
        let m = self.m();
        check_size(m)?;
        let samples: Vec<Mat2<T>> = (0..m)
            .map(|j| {
                self.coeffs.iter().enumerate().fold(Mat2::zero(), |acc, (k, a)| {
                    acc + a.scale_c(unit_root((j * k) as i64, m))
                })
            })
            .collect();
        Ensemble::from_full(&samples)
    }

    pub fn norm_sqr(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, c| a + c.norm_sqr())
    }
}

/// Four ensembles: a point of the product space on which `V` and the
/// diagonal `W` live.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ProductPoint<T: Real> {
    pub parts: [Ensemble<T>; 4],
}

impl<T: Real> ProductPoint<T> {
    pub fn new(parts: [Ensemble<T>; 4]) -> Self {
        let m = parts[0].m();
        assert!(parts.iter().all(|p| p.m() == m), "product parts must share M");
        Self { parts }
    }

    /// The diagonal point `(E, E, E, E)`.
    pub fn diagonal(e: &Ensemble<T>) -> Self {
        Self { parts: [e.clone(), e.clone(), e.clone(), e.clone()] }
    }

    pub fn m(&self) -> usize {
        self.parts[0].m()
    }

    pub fn to_hpoint(&self) -> HPoint<T> {
        HPoint::new(self.parts.iter().flat_map(|p| p.to_hpoint().coords).collect())
    }

    /// Arithmetic mean of the four parts.
    pub fn mean(&self) -> Ensemble<T> {
        let quarter = T::lit(0.25);
        let s01 = self.parts[0].plus(&self.parts[1]);
        let s23 = self.parts[2].plus(&self.parts[3]);
        s01.lin_comb(quarter, &s23, quarter)
    }
}

impl<T: Real> Point<T> for ProductPoint<T> {
    fn inner(&self, other: &Self) -> T {
        self.parts.iter().zip(&other.parts).fold(T::zero(), |acc, (a, b)| acc + a.inner(b))
    }

    fn lin_comb(&self, a: T, other: &Self, b: T) -> Self {
        let p = |i: usize| self.parts[i].lin_comb(a, &other.parts[i], b);
        Self { parts: [p(0), p(1), p(2), p(3)] }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct EnsembleRepr<T: Real> {
    #[serde(rename = "M")]
    m: usize,
    free: Vec<[[T; 2]; 4]>,
}

impl<T: Real> From<Ensemble<T>> for EnsembleRepr<T> {
    fn from(e: Ensemble<T>) -> Self {
        let free = e.free.iter().map(|a| a.entries().map(|z| [z.re, z.im])).collect();
        Self { m: e.m, free }
    }
}

impl<T: Real> TryFrom<EnsembleRepr<T>> for Ensemble<T> {
    type Error = Error;
    fn try_from(r: EnsembleRepr<T>) -> Result<Self> {
        if r.free.len() * 2 != r.m {
            return Err(Error::SizeMismatch { expected: r.m / 2, found: r.free.len() });
        }
        Ensemble::from_free(
            r.free
                .into_iter()
                .map(|e| Mat2::from_entries(e.map(|[re, im]| Complex::new(re, im))))
                .collect(),
        )
    }
}
