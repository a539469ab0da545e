//! Wavelet artifacts from feasible ensembles: filter coefficients, residual
//! checks of every design condition, and cascade-algorithm samples.

use std::io::{self, Write};

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::algebra::{Mat2, Point};
use crate::constraints::{conjugate_mirror, WaveletSets};
use crate::ensemble::{unit_root, Ensemble};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerance on the `(−1)^k` row pattern of the coefficient matrices.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Near-property excess at or below the solve tolerance counts as none: a
/// solution is only within the final gap of each constraint set.
pub const EXCESS_TOL: f64 = 1e-9;

/// Scaling and wavelet filter coefficients `h_k`, `g_k`, `k = 0 … M−1`, of
/// `H(ξ) = Σ h_k e^{2πikξ}` and `G(ξ) = Σ g_k e^{2πikξ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct FilterPair<T: Real> {
    #[serde(with = "coeff_list")]
    pub h: Vec<Complex<T>>,
    #[serde(with = "coeff_list", default)]
    pub g: Vec<Complex<T>>,
}

impl<T: Real> FilterPair<T> {
    pub fn real(h: &[T], g: &[T]) -> Self {
        let c = |v: &[T]| v.iter().map(|&x| Complex::new(x, T::zero())).collect();
        Self { h: c(h), g: c(g) }
    }

    pub fn h_sum(&self) -> Complex<T> {
        self.h.iter().fold(Complex::zero(), |a, &b| a + b)
    }

    /// Largest imaginary part among all coefficients.
    pub fn max_imag(&self) -> T {
        self.h.iter().chain(&self.g).fold(T::zero(), |a, z| a.max(z.im.abs()))
    }

    /// `max_n |Σ_k h_k·conj(h_{k−2n}) − δ_{n0}/2|`.
    pub fn orthonormality_defect(&self) -> T {
        let len = self.h.len() as i64;
        let half = T::lit(0.5);
        let mut worst = T::zero();
        let mut n = -(len / 2) - 1;
        while 2 * n <= len {
            let s: Complex<T> = (0..len).fold(Complex::zero(), |acc, k| {
                let j = k - 2 * n;
                if (0..len).contains(&j) {
                    acc + self.h[k as usize] * self.h[j as usize].conj()
                } else {
                    acc
                }
            });
            let target = if n == 0 { half } else { T::zero() };
            let diff: Complex<T> = s - Complex::new(target, T::zero());
            worst = worst.max(diff.norm());
            n += 1;
        }
        worst
    }

    fn eval(coeffs: &[Complex<T>], num: i64, den: usize) -> Complex<T> {
        coeffs
            .iter()
            .enumerate()
            .fold(Complex::zero(), |acc, (k, &c)| acc + c * unit_root::<T>(num * k as i64, den))
    }

    /// Ensemble of samples `U_j = [[H, G], [H(·+½), G(·+½)]](j/M)`; `M` is
    /// the filter length.
    pub fn to_ensemble(&self) -> Result<Ensemble<T>> {
        let m = self.h.len();
        if self.g.len() != m {
            return Err(Error::SizeMismatch { expected: m, found: self.g.len() });
        }
        let free = (0..m / 2)
            .map(|j| {
                // ξ = j/M and ξ + 1/2 = (2j + M)/(2M)
                let (a, b) = (2 * j as i64, 2 * j as i64 + m as i64);
                Mat2::new(
                    Self::eval(&self.h, a, 2 * m),
                    Self::eval(&self.g, a, 2 * m),
                    Self::eval(&self.h, b, 2 * m),
                    Self::eval(&self.g, b, 2 * m),
                )
            })
            .collect();
        Ensemble::from_free(free)
    }
}

/// Filters from the first row of the coefficient matrices `A_k`.
pub fn extract_filters<T: Real>(e: &Ensemble<T>) -> Result<FilterPair<T>> {
    let coeffs = e.dft().coeffs;
    let scale = T::one() + e.norm();
    let mut dev = T::zero();
    for (k, a) in coeffs.iter().enumerate() {
        let s = if k % 2 == 0 { T::one() } else { -T::one() };
        dev = dev.max((a.a21 - a.a11 * s).norm()).max((a.a22 - a.a12 * s).norm());
    }
    if dev > T::lit(STRUCTURE_TOL) * scale {
        return Err(Error::StructureViolation { deviation: dev.to_f64_lossy() });
    }
    Ok(FilterPair { h: coeffs.iter().map(|a| a.a11).collect(), g: coeffs.iter().map(|a| a.a12).collect() })
}

/// Named residuals of every design condition for one ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ResidualReport<T: Real> {
    /// `max_j ‖U_j U_j* − I‖` over the `M` samples.
    pub unitarity: T,
    /// Same at the half-shifted nodes.
    pub unitarity_shifted: T,
    /// `|U_0[1,1] − 1|`, i.e. `|H(0) − 1|`.
    pub dc_gain: T,
    /// `|U_0[1,2]|`, i.e. `|G(0)|`.
    pub wavelet_dc: T,
    /// `|Σ h_k − 1|`.
    pub h_sum: T,
    pub regularity: T,
    /// `max_j ‖U_j − conj(U_{M−j})‖`.
    pub real_valuedness: T,
    pub imaginary_parts: T,
    /// Largest near-symmetry or near-cardinality defect.
    pub near_property_defect: T,
    /// Amount by which that defect exceeds `γ`, clamped at 0.
    pub near_property_excess: T,
    pub orthonormality: T,
}

impl<T: Real> ResidualReport<T> {
    /// Every hard condition below `tol`, near-property excess at most
    /// [`EXCESS_TOL`], and filter orthonormality below `orth_tol`.
    pub fn passes(&self, tol: T, orth_tol: T) -> bool {
        self.unitarity < tol
            && self.unitarity_shifted < tol
            && self.dc_gain < tol
            && self.h_sum < tol
            && self.regularity < tol
            && self.real_valuedness < tol
            && self.near_property_excess <= T::lit(EXCESS_TOL)
            && self.orthonormality < orth_tol
    }
}

pub fn verify<T: Real>(e: &Ensemble<T>, sets: &WaveletSets<T>) -> Result<ResidualReport<T>> {
    let filters = extract_filters(e)?;
    let max_unit = |x: &Ensemble<T>| x.full_samples().iter().fold(T::zero(), |a, u| a.max(u.unitarity_defect()));
    let u0 = e.full_view(0);
    let mirror = conjugate_mirror(e);
    let real_valuedness = (0..e.m())
        .map(|j| (e.full_view(j) - mirror.full_view(j)).norm())
        .fold(T::zero(), T::max);
    let regularity = sets.regularity_map().evaluate(e).iter().fold(T::zero(), |a, z| a.max(z.norm()));
    let defects = sets.near_property_defects(e);
    Ok(ResidualReport {
        unitarity: max_unit(e),
        unitarity_shifted: max_unit(&e.half_shift()),
        dc_gain: (u0.a11 - Complex::new(T::one(), T::zero())).norm(),
        wavelet_dc: u0.a12.norm(),
        h_sum: (filters.h_sum() - Complex::new(T::one(), T::zero())).norm(),
        regularity,
        real_valuedness,
        imaginary_parts: filters.max_imag(),
        near_property_defect: defects.iter().fold(T::zero(), |a, &d| a.max(d)),
        near_property_excess: sets.near_property_excess(e),
        orthonormality: filters.orthonormality_defect(),
    })
}

/// Samples `(x, φ(x), ψ(x))` on a dyadic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeTable<T> {
    pub x: Vec<T>,
    pub phi: Vec<T>,
    pub psi: Vec<T>,
}

pub const DEFAULT_LEVELS: usize = 10;
/// `max|φ_n|` above this means the refinement iteration diverges.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Cascade algorithm on the real parts of the filters.
///
/// Starting from the indicator of `[0, 1)`, applies
/// `φ ← 2 Σ_k h_k φ(2x − k)` `levels` times on the grid `x_i = i·2^{−levels}`
/// over `[0, L−1]` (`L` = number of scaling coefficients), then
/// `ψ = 2 Σ_k g_k φ(2x − k)`.
pub fn cascade<T: Real>(f: &FilterPair<T>, levels: usize) -> Result<CascadeTable<T>> {
    if !(1..=24).contains(&levels) {
        return Err(Error::InvalidConfig(format!("levels must be in 1..=24, got {levels}")));
    }
    let len = f.h.len();
    if len < 2 {
        return Err(Error::InvalidConfig("need at least two scaling coefficients".into()));
    }
    let h: Vec<T> = f.h.iter().map(|z| z.re).collect();
    let g: Vec<T> = f.g.iter().map(|z| z.re).collect();
    let unit = 1usize << levels;
    let n = (len - 1) * unit;
    let two = T::lit(2.0);
    let refine = |phi: &[T], taps: &[T]| -> Vec<T> {
        (0..=n)
            .map(|i| {
                let s = taps.iter().enumerate().fold(T::zero(), |acc, (k, &c)| {
                    match (2 * i).checked_sub(k * unit) {
                        Some(idx) if idx <= n => acc + c * phi[idx],
                        _ => acc,
                    }
                });
                two * s
            })
            .collect()
    };
    let mut phi: Vec<T> = (0..=n).map(|i| if i < unit { T::one() } else { T::zero() }).collect();
    for iteration in 1..=levels {
        phi = refine(&phi, &h);
        let max_abs = phi.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if !(max_abs <= T::lit(DIVERGENCE_BOUND)) {
            return Err(Error::Divergence { iteration, max_abs: max_abs.to_f64_lossy() });
        }
    }
    let psi = refine(&phi, &g);
    let step = T::one() / T::from_usize_lossy(unit);
    let x = (0..=n).map(|i| T::from_usize_lossy(i) * step).collect();
    Ok(CascadeTable { x, phi, psi })
}

/// CSV with header `x,phi,psi`, 17 significant digits per value.
pub fn write_csv<T: Real, W: Write>(table: &CascadeTable<T>, mut out: W) -> io::Result<()> {
    writeln!(out, "x,phi,psi")?;
    for ((x, p), s) in table.x.iter().zip(&table.phi).zip(&table.psi) {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", x.to_f64_lossy(), p.to_f64_lossy(), s.to_f64_lossy())?;
    }
    Ok(())
}

/// Coefficients serialize as `[re, im]` pairs; plain numbers are accepted on
/// input as real coefficients.
mod coeff_list {
    use num_complex::Complex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::Real;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Coeff<T> {
        Real(T),
        Pair([T; 2]),
    }

    pub fn serialize<T: Real + Serialize, S: Serializer>(v: &[Complex<T>], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[T; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, T: Real + Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex<T>>, D::Error> {
        let raw: Vec<Coeff<T>> = Vec::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|c| match c {
                Coeff::Real(re) => Complex::new(re, T::zero()),
                Coeff::Pair([re, im]) => Complex::new(re, im),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::ProblemSpec;

    fn haar() -> FilterPair<f64> {
        FilterPair::real(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0], &[0.5, -0.5, 0.0, 0.0, 0.0, 0.0])
    }

    fn daub4() -> FilterPair<f64> {
        let s = 3f64.sqrt();
        let h = [(1.0 + s) / 8.0, (3.0 + s) / 8.0, (3.0 - s) / 8.0, (1.0 - s) / 8.0];
        let g: Vec<f64> = (0..4).map(|k| if k % 2 == 0 { h[3 - k] } else { -h[3 - k] }).collect();
        FilterPair::real(&h, &g)
    }

    #[test]
    fn filters_roundtrip_through_ensemble() {
        for f in [haar(), daub4()] {
            let e = f.to_ensemble().unwrap();
            let back = extract_filters(&e).unwrap();
            for (a, b) in f.h.iter().chain(&f.g).zip(back.h.iter().chain(&back.g)) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn consistent_ensembles_always_have_row_structure() {
        for seed in 0..5 {
            let e = Ensemble::<f64>::random(8, seed).unwrap();
            assert!(extract_filters(&e).is_ok());
        }
    }

    #[test]
    fn haar_filters_verify() {
        let sets = WaveletSets::new(ProblemSpec { d: 0, ..ProblemSpec::symmetric() }).unwrap();
        let r = verify(&haar().to_ensemble().unwrap(), &sets).unwrap();
        for v in [r.unitarity, r.unitarity_shifted, r.dc_gain, r.wavelet_dc, r.h_sum, r.regularity, r.real_valuedness, r.orthonormality] {
            assert!(v < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn daubechies_filters_verify_with_two_vanishing_moments() {
        let spec = ProblemSpec { m: 4, d: 1, ..ProblemSpec::cardinal() };
        let sets = WaveletSets::new(spec).unwrap();
        let r = verify(&daub4().to_ensemble().unwrap(), &sets).unwrap();
        assert!(r.unitarity < 1e-12 && r.unitarity_shifted < 1e-12);
        assert!(r.regularity < 1e-12 && r.orthonormality < 1e-12 && r.h_sum < 1e-12);
    }

    #[test]
    fn random_ensemble_fails_verification() {
        let sets = WaveletSets::new(ProblemSpec::<f64>::symmetric()).unwrap();
        let r = verify(&Ensemble::random(6, 3).unwrap(), &sets).unwrap();
        assert!(!r.passes(1e-6, 1e-4));
    }

    #[test]
    fn cascade_haar_is_exact() {
        let t = cascade(&FilterPair::real(&[0.5, 0.5], &[0.5, -0.5]), 6).unwrap();
        assert_eq!(t.x.len(), 65);
        for ((&x, &p), &s) in t.x.iter().zip(&t.phi).zip(&t.psi) {
            let phi = if x < 1.0 { 1.0 } else { 0.0 };
            let psi = if x < 0.5 { 1.0 } else if x < 1.0 { -1.0 } else { 0.0 };
            assert_eq!((p, s), (phi, psi), "x = {x}");
        }
    }

    #[test]
    fn cascade_hat_converges() {
        for levels in [4, 8, 10] {
            let t = cascade(&FilterPair::real(&[0.25, 0.5, 0.25], &[]), levels).unwrap();
            let err = t.x.iter().zip(&t.phi).map(|(x, p): (&f64, &f64)| (p - (1.0 - (x - 1.0).abs())).abs()).fold(0.0, f64::max);
            assert!(err < 2f64.powi(2 - levels as i32), "levels {levels}: {err}");
            assert!(t.psi.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn cascade_preserves_mass_at_every_level() {
        let f = daub4();
        for levels in 1..=10 {
            let t = cascade(&f, levels).unwrap();
            let mass: f64 = t.phi.iter().sum::<f64>() * 2f64.powi(-(levels as i32));
            assert!((mass - 1.0).abs() < 1e-8, "levels {levels}: {mass}");
        }
    }

    #[test]
    fn cascade_reports_divergence() {
        match cascade(&FilterPair::real(&[2.0, -1.0], &[]), 12) {
            Err(Error::Divergence { iteration, max_abs }) => assert!(iteration <= 12 && max_abs > 1e6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(cascade(&FilterPair::real(&[1.0], &[]), 4), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn csv_layout() {
        let t = cascade(&FilterPair::real(&[0.5, 0.5], &[0.5, -0.5]), 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,phi,psi");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "5.0000000000000000e-1,1.0000000000000000e0,-1.0000000000000000e0");
    }

    #[test]
    fn filter_json_accepts_numbers_and_pairs() {
        let f: FilterPair<f64> = serde_json::from_str(r#"{"h": [0.5, [0.5, 0.0]], "g": [[0.5, 0], -0.5]}"#).unwrap();
        assert_eq!(f, FilterPair::real(&[0.5, 0.5], &[0.5, -0.5]));
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"h":[[0.5,0.0],[0.5,0.0]],"g":[[0.5,0.0],[-0.5,0.0]]}"#);
        let h_only: FilterPair<f64> = serde_json::from_str(r#"{"h": [0.25, 0.5, 0.25]}"#).unwrap();
        assert!(h_only.g.is_empty());
    }
}
