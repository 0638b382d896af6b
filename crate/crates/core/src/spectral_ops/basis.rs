//! Real orthonormal harmonics.
//!
//! On `S²`: `Y_ℓ^0 = P̄_ℓ^0(z)/√(2π)`, `Y_ℓ^m = √2 P̄_ℓ^m(z) cos(mφ)/√(2π)` for `m > 0` and
//! `Y_ℓ^m = √2 P̄_ℓ^{|m|}(z) sin(|m|φ)/√(2π)` for `m < 0`, where `P̄_ℓ^m` is normalized by
//! `∫_{-1}^{1} (P̄_ℓ^m)² = 1` and carries no Condon–Shortley phase. Coefficient `(ℓ, m)` is stored
//! at index `ℓ² + ℓ + m`.
//!
//! Zonal harmonics on `S²`: `√((2ℓ+1)/4π) P_ℓ(x₃)`; on `S³`: `U_ℓ(x₄)/√(2π²)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarmonicBasis {
    /// All real harmonics on `S²`, `(L+1)²` coefficients.
    RealS2,
    /// Zonal harmonics on `S²`, one coefficient per degree.
    ZonalS2,
    /// Zonal harmonics on `S³`, one coefficient per degree.
    ZonalS3,
}

impl HarmonicBasis {
    pub fn len(&self, max_degree: usize) -> usize {
        match self {
            HarmonicBasis::RealS2 => (max_degree + 1) * (max_degree + 1),
            _ => max_degree + 1,
        }
    }

    pub fn is_zonal(&self) -> bool {
        !matches!(self, HarmonicBasis::RealS2)
    }

    /// Degree of the coefficient stored at `idx`.
    pub fn degree_of(&self, idx: usize) -> usize {
        match self {
            HarmonicBasis::RealS2 => (idx as f64).sqrt().floor() as usize,
            _ => idx,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            HarmonicBasis::ZonalS3 => 3,
            _ => 2,
        }
    }
}

pub fn harmonic_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

#[inline]
pub(crate) fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// `P̄_ℓ^m(z)` for `0 ≤ m ≤ ℓ ≤ L`, stored at `ℓ(ℓ+1)/2 + m`.
pub fn normalized_associated_legendre(max_degree: usize, z: f64) -> Vec<f64> {
    let l_max = max_degree;
    let mut out = vec![0.0; tri(l_max, l_max) + 1];
    let s = (1.0 - z * z).max(0.0).sqrt();
    let mut pmm = (0.5f64).sqrt();
    for m in 0..=l_max {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        out[tri(m, m)] = pmm;
        if m == l_max {
            break;
        }
        let mf = m as f64;
        let mut p2 = pmm;
        let mut p1 = (2.0 * mf + 3.0).sqrt() * z * pmm;
        out[tri(m + 1, m)] = p1;
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lm1 = lf - 1.0;
            let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
            let p = a * (z * p1 - b * p2);
            out[tri(l, m)] = p;
            p2 = p1;
            p1 = p;
        }
    }
    out
}

/// Legendre polynomials `P_0..=P_L` at `t`.
pub fn legendre(max_degree: usize, t: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(max_degree + 1);
    p.push(1.0);
    if max_degree >= 1 {
        p.push(t);
    }
    for l in 2..=max_degree {
        let lf = l as f64;
        let v = ((2.0 * lf - 1.0) * t * p[l - 1] - (lf - 1.0) * p[l - 2]) / lf;
        p.push(v);
    }
    p
}

/// Chebyshev polynomials of the second kind `U_0..=U_L` at `t` (Gegenbauer index 1).
pub fn gegenbauer_one(max_degree: usize, t: f64) -> Vec<f64> {
    let mut u = Vec::with_capacity(max_degree + 1);
    u.push(1.0);
    if max_degree >= 1 {
        u.push(2.0 * t);
    }
    for l in 2..=max_degree {
        let v = 2.0 * t * u[l - 1] - u[l - 2];
        u.push(v);
    }
    u
}

/// Orthonormal zonal harmonics of degree `0..=L` on `S^n` evaluated at axial coordinate `t`.
pub fn zonal_harmonic(n: usize, max_degree: usize, t: f64) -> Vec<f64> {
    match n {
        2 => legendre(max_degree, t)
            .into_iter()
            .enumerate()
            .map(|(l, p)| ((2.0 * l as f64 + 1.0) / (4.0 * PI)).sqrt() * p)
            .collect(),
        3 => {
            let c = 1.0 / (2.0 * PI * PI).sqrt();
            gegenbauer_one(max_degree, t).into_iter().map(|u| c * u).collect()
        }
        _ => panic!("zonal harmonics are provided for n = 2, 3"),
    }
}

/// `Y_ℓ^m(x)` on `S²`.
pub fn real_harmonic(l: usize, m: i64, x: &[f64]) -> f64 {
    let z = x[2].clamp(-1.0, 1.0);
    let phi = x[1].atan2(x[0]);
    let am = m.unsigned_abs() as usize;
    let p = normalized_associated_legendre(l, z)[tri(l, am)];
    let c = 1.0 / (2.0 * PI).sqrt();
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => c * p,
        std::cmp::Ordering::Greater => c * 2f64.sqrt() * p * (am as f64 * phi).cos(),
        std::cmp::Ordering::Less => c * 2f64.sqrt() * p * (am as f64 * phi).sin(),
    }
}
