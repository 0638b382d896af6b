use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use super::basis::{normalized_associated_legendre, tri, zonal_harmonic, HarmonicBasis};
use super::eigen::OperatorSpectrum;
use crate::error::{Error, Result};
use crate::sphere_core::{GridField, GridKind, ProblemParams, QuadratureGrid};

/// Coefficients in one of the orthonormal harmonic bases, up to degree `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    basis: HarmonicBasis,
    max_degree: usize,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(basis: HarmonicBasis, max_degree: usize) -> Self {
        Self { basis, max_degree, coeffs: vec![0.0; basis.len(max_degree)] }
    }

    pub fn from_coeffs(basis: HarmonicBasis, max_degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len(max_degree) {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients for degree {max_degree}, got {}",
                basis.len(max_degree),
                coeffs.len()
            )));
        }
        Ok(Self { basis, max_degree, coeffs })
    }

    pub fn basis(&self) -> HarmonicBasis {
        self.basis
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `Y_ℓ^m` (`m` must be 0 for zonal bases).
    pub fn coeff(&self, l: usize, m: i64) -> f64 {
        match self.basis {
            HarmonicBasis::RealS2 => self.coeffs[super::basis::harmonic_index(l, m)],
            _ => {
                assert_eq!(m, 0, "zonal bases only carry m = 0");
                self.coeffs[l]
            }
        }
    }

    pub fn set_coeff(&mut self, l: usize, m: i64, v: f64) {
        let idx = match self.basis {
            HarmonicBasis::RealS2 => super::basis::harmonic_index(l, m),
            _ => l,
        };
        self.coeffs[idx] = v;
    }

    /// Multiplies each degree-`k` block by `f(k)`.
    pub fn scale_degrees(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c *= f(self.basis.degree_of(i));
        }
        out
    }

    /// `L²(S^n)` inner product via Parseval.
    pub fn dot(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.basis, other.basis);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Sum of squares of the coefficients of degree `k`.
    pub fn degree_energy(&self, k: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.degree_of(*i) == k)
            .map(|(_, c)| c * c)
            .sum()
    }

    /// Drops the degrees above the last one carrying a coefficient larger than
    /// `rel_tol` times the largest coefficient.
    pub fn truncated(&self, rel_tol: f64) -> SpectralField {
        let big = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let keep = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > rel_tol * big)
            .map(|(i, _)| self.basis.degree_of(i))
            .max()
            .unwrap_or(0);
        let len = self.basis.len(keep);
        SpectralField { basis: self.basis, max_degree: keep, coeffs: self.coeffs[..len].to_vec() }
    }

    /// Evaluates the expansion at an arbitrary point of the sphere.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self.basis {
            HarmonicBasis::ZonalS2 | HarmonicBasis::ZonalS3 => {
                let n = self.basis.dim();
                let z = zonal_harmonic(n, self.max_degree, x[n].clamp(-1.0, 1.0));
                z.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
            }
            HarmonicBasis::RealS2 => {
                let l_max = self.max_degree;
                let p = normalized_associated_legendre(l_max, x[2].clamp(-1.0, 1.0));
                let phi = x[1].atan2(x[0]);
                let c0 = 1.0 / (2.0 * PI).sqrt();
                let c1 = 2f64.sqrt() * c0;
                let mut acc = 0.0;
                for l in 0..=l_max {
                    acc += c0 * p[tri(l, 0)] * self.coeffs[l * l + l];
                }
                let (s1, c1m) = phi.sin_cos();
                let (mut s, mut c) = (0.0, 1.0);
                for m in 1..=l_max {
                    (s, c) = (s * c1m + c * s1, c * c1m - s * s1);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    for l in m..=l_max {
                        let base = l * l + l;
                        a += p[tri(l, m)] * self.coeffs[base + m];
                        b += p[tri(l, m)] * self.coeffs[base - m];
                    }
                    acc += c1 * (a * c + b * s);
                }
                acc
            }
        }
    }
}

/// Coefficientwise multiplication by `λ_k`.
pub fn apply_psigma(c: &SpectralField, params: &ProblemParams) -> SpectralField {
    let spec = OperatorSpectrum::new(params, c.max_degree());
    c.scale_degrees(|k| spec.get(k))
}

/// Coefficientwise division by `λ_k`.
pub fn invert_psigma(c: &SpectralField, params: &ProblemParams) -> SpectralField {
    let spec = OperatorSpectrum::new(params, c.max_degree());
    c.scale_degrees(|k| 1.0 / spec.get(k))
}

/// Analysis/synthesis pair bound to one grid and maximal degree.
///
/// Product `S²` grids use the full real basis (per-ring FFT followed by a Legendre sum per order);
/// zonal `S²` grids and all `S³` grids use zonal bases.
pub struct SphericalTransform {
    grid: Arc<QuadratureGrid>,
    basis: HarmonicBasis,
    max_degree: usize,
    /// Per ring (product) or per axial group (zonal): basis function table.
    tables: Vec<Vec<f64>>,
    groups: Vec<(usize, usize)>,
    fft_fwd: Option<Arc<dyn Fft<f64>>>,
    fft_inv: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for SphericalTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SphericalTransform")
            .field("basis", &self.basis)
            .field("max_degree", &self.max_degree)
            .field("nodes", &self.grid.len())
            .finish()
    }
}

impl SphericalTransform {
    pub fn new(grid: &Arc<QuadratureGrid>, max_degree: usize) -> Result<Self> {
        if 2 * max_degree > grid.exactness_degree() {
            return Err(Error::GridTooCoarse { exactness: grid.exactness_degree(), required: 2 * max_degree });
        }
        let n = grid.n();
        let basis = match (n, grid.kind()) {
            (2, GridKind::Product) => HarmonicBasis::RealS2,
            (2, GridKind::Zonal) => HarmonicBasis::ZonalS2,
            _ => HarmonicBasis::ZonalS3,
        };
        if basis == HarmonicBasis::RealS2 {
            let m = grid.ring_size();
            let tables = (0..grid.ring_count())
                .map(|j| normalized_associated_legendre(max_degree, grid.axial(j * m)))
                .collect();
            let mut planner = FftPlanner::new();
            return Ok(Self {
                grid: grid.clone(),
                basis,
                max_degree,
                tables,
                groups: (0..grid.ring_count()).map(|j| (j * m, (j + 1) * m)).collect(),
                fft_fwd: Some(planner.plan_fft_forward(m)),
                fft_inv: Some(planner.plan_fft_inverse(m)),
            });
        }
        let groups = axial_groups(grid);
        let tables = groups.iter().map(|(a, _)| zonal_harmonic(n, max_degree, grid.axial(*a))).collect();
        Ok(Self { grid: grid.clone(), basis, max_degree, tables, groups, fft_fwd: None, fft_inv: None })
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn basis(&self) -> HarmonicBasis {
        self.basis
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Quadrature projection onto the basis, `c = ∫ f Y`.
    pub fn analyze_values(&self, f: &[f64]) -> SpectralField {
        assert_eq!(f.len(), self.grid.len());
        let l_max = self.max_degree;
        let w = self.grid.weights();
        if self.basis.is_zonal() {
            let mut coeffs = vec![0.0; l_max + 1];
            for ((a, b), table) in self.groups.iter().zip(&self.tables) {
                let s: f64 = (*a..*b).map(|i| w[i] * f[i]).sum();
                coeffs.iter_mut().zip(table).for_each(|(c, z)| *c += s * z);
            }
            return SpectralField { basis: self.basis, max_degree: l_max, coeffs };
        }
        let m_ring = self.grid.ring_size();
        let fft = self.fft_fwd.as_ref().unwrap();
        let ring_modes: Vec<Vec<Complex64>> = self
            .groups
            .par_iter()
            .map(|(a, b)| {
                let mut buf: Vec<Complex64> = f[*a..*b].iter().map(|v| Complex64::new(*v, 0.0)).collect();
                fft.process(&mut buf);
                let wr = w[*a];
                buf.truncate(l_max + 1);
                buf.iter_mut().for_each(|c| *c *= wr);
                buf
            })
            .collect();
        debug_assert!(l_max < m_ring / 2 + 1);
        let c0 = 1.0 / (2.0 * PI).sqrt();
        let c1 = 2f64.sqrt() * c0;
        let per_order: Vec<Vec<(usize, f64)>> = (0..=l_max)
            .into_par_iter()
            .map(|m| {
                let mut out = Vec::with_capacity(2 * (l_max + 1 - m));
                for l in m..=l_max {
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for (modes, table) in ring_modes.iter().zip(&self.tables) {
                        let p = table[tri(l, m)];
                        re += p * modes[m].re;
                        im += p * modes[m].im;
                    }
                    let base = l * l + l;
                    if m == 0 {
                        out.push((base, c0 * re));
                    } else {
                        out.push((base + m, c1 * re));
                        out.push((base - m, -c1 * im));
                    }
                }
                out
            })
            .collect();
        let mut coeffs = vec![0.0; self.basis.len(l_max)];
        for (i, v) in per_order.into_iter().flatten() {
            coeffs[i] = v;
        }
        SpectralField { basis: self.basis, max_degree: l_max, coeffs }
    }

    pub fn analyze(&self, f: &GridField) -> SpectralField {
        self.analyze_values(f.values())
    }

    pub fn synthesize_values(&self, c: &SpectralField) -> Vec<f64> {
        assert_eq!(c.basis, self.basis, "basis mismatch");
        let l_max = self.max_degree.min(c.max_degree);
        let mut out = vec![0.0; self.grid.len()];
        if self.basis.is_zonal() {
            for ((a, b), table) in self.groups.iter().zip(&self.tables) {
                let v: f64 = (0..=l_max).map(|l| table[l] * c.coeffs[l]).sum();
                out[*a..*b].iter_mut().for_each(|o| *o = v);
            }
            return out;
        }
        let m_ring = self.grid.ring_size();
        let fft = self.fft_inv.as_ref().unwrap();
        let c0 = 1.0 / (2.0 * PI).sqrt();
        let c1 = 2f64.sqrt() * c0;
        out.par_chunks_mut(m_ring).zip(self.tables.par_iter()).for_each(|(ring, table)| {
            let mut buf = vec![Complex64::new(0.0, 0.0); m_ring];
            for m in 0..=l_max {
                let mut a = 0.0;
                let mut b = 0.0;
                for l in m..=l_max {
                    let p = table[tri(l, m)];
                    let base = l * l + l;
                    a += p * c.coeffs[base + m];
                    if m > 0 {
                        b += p * c.coeffs[base - m];
                    }
                }
                buf[m] = if m == 0 { Complex64::new(c0 * a, 0.0) } else { Complex64::new(c1 * a, -c1 * b) };
            }
            fft.process(&mut buf);
            ring.iter_mut().zip(&buf).for_each(|(o, v)| *o = v.re);
        });
        out
    }

    pub fn synthesize(&self, c: &SpectralField) -> GridField {
        GridField::new(self.grid.clone(), self.synthesize_values(c)).expect("synthesis is finite")
    }

    /// `P_σ^{-1}` on grid values through the spectral route (band-limits to degree `L`).
    pub fn inverse_psigma_values(&self, f: &[f64], spectrum: &OperatorSpectrum) -> Vec<f64> {
        let c = self.analyze_values(f).scale_degrees(|k| 1.0 / spectrum.get(k));
        self.synthesize_values(&c)
    }
}

/// Contiguous node ranges sharing one value of `x_{n+1}` (zonal bases only).
fn axial_groups(grid: &QuadratureGrid) -> Vec<(usize, usize)> {
    match (grid.n(), grid.kind()) {
        (_, GridKind::Zonal) => (0..grid.len()).map(|i| (i, i + 1)).collect(),
        (3, GridKind::Product) => {
            let block = grid.len() / grid.height_rule().map(|r| r.len()).unwrap_or(1);
            (0..grid.len() / block).map(|a| (a * block, (a + 1) * block)).collect()
        }
        _ => unreachable!("axial groups are only used for zonal bases"),
    }
}

/// Analysis at the largest degree the grid supports.
pub fn analyze(f: &GridField) -> Result<SpectralField> {
    let t = SphericalTransform::new(f.grid(), f.grid().max_transform_degree())?;
    Ok(t.analyze(f))
}

/// Synthesis on `grid`.
pub fn synthesize(c: &SpectralField, grid: &Arc<QuadratureGrid>) -> Result<GridField> {
    let t = SphericalTransform::new(grid, c.max_degree())?;
    if t.basis() != c.basis() {
        return Err(Error::UnsupportedGrid(format!("grid basis {:?} does not match field basis {:?}", t.basis(), c.basis())));
    }
    Ok(t.synthesize(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_ops::basis::real_harmonic;
    use crate::sphere_core::build_grid;

    #[test]
    fn degree_one_has_single_coefficient() {
        let g = Arc::new(build_grid(2, 12).unwrap());
        let f = GridField::from_fn(&g, |x| real_harmonic(1, 1, x));
        let c = analyze(&f).unwrap();
        for (i, v) in c.coeffs().iter().enumerate() {
            let want = if i == 3 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-13, "i={i}: {v}");
        }
    }

    #[test]
    fn constant_coefficient_is_sqrt_area() {
        for (n, kind) in [(2, GridKind::Product), (2, GridKind::Zonal), (3, GridKind::Product), (3, GridKind::Zonal)] {
            let g = Arc::new(QuadratureGrid::build(n, 8, kind).unwrap());
            let c = analyze(&GridField::constant(&g, 2.5)).unwrap();
            let area = g.total_weight();
            assert!((c.coeffs()[0] - 2.5 * area.sqrt()).abs() < 1e-12);
            assert!(c.coeffs()[1..].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn evaluate_matches_synthesis() {
        let g = Arc::new(build_grid(2, 10).unwrap());
        let mut c = SpectralField::zeros(HarmonicBasis::RealS2, 9);
        for (i, v) in c.coeffs_mut().iter_mut().enumerate() {
            *v = ((i * 37 % 11) as f64 - 5.0) / 7.0;
        }
        let t = SphericalTransform::new(&g, 9).unwrap();
        let vals = t.synthesize_values(&c);
        for i in [0, 17, 55, 199] {
            assert!((c.evaluate(g.node(i)) - vals[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let g = Arc::new(build_grid(2, 8).unwrap());
        assert!(matches!(SphericalTransform::new(&g, 8), Err(Error::GridTooCoarse { .. })));
    }
}

/// True when values on an `S³` product grid depend only on `x₄` (always true elsewhere).
pub fn is_zonal_data(grid: &QuadratureGrid, values: &[f64], rel_tol: f64) -> bool {
    if !(grid.n() == 3 && grid.kind() == GridKind::Product) {
        return true;
    }
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    axial_groups(grid)
        .iter()
        .all(|(a, b)| values[*a..*b].iter().all(|v| (v - values[*a]).abs() <= rel_tol * scale))
}

/// `T_φ v` for a sampled field: its spectral interpolant is evaluated at `φ(x)`.
///
/// On zonal grids the pole of `φ` must lie on the `x_{n+1}` axis so the result stays zonal.
pub fn pushforward_field(
    v: &GridField,
    m: &crate::sphere_core::MoebiusParams,
    params: &ProblemParams,
) -> Result<GridField> {
    let grid = v.grid();
    if grid.kind() == GridKind::Zonal && (m.pole().coords()[grid.n()].abs() - 1.0).abs() > 1e-12 && !m.is_identity() {
        return Err(Error::UnsupportedGrid("zonal fields can only be pushed forward along the axis".into()));
    }
    let c = analyze(v)?;
    let mut buf = vec![0.0; grid.n() + 1];
    let values = grid
        .nodes()
        .map(|x| {
            m.apply_into(x, &mut buf);
            c.evaluate(&buf) * m.conformal_weight(x, params)
        })
        .collect();
    GridField::new(grid.clone(), values)
}
