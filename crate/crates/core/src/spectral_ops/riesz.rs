//! Singular quadrature for the spherical Riesz potential
//! `c_{n,σ} ∫ f(ζ) |ξ−ζ|^{2σ−n} dvol(ζ)`.
//!
//! The kernel is split with a smooth bump `χ` of geodesic radius `ρ = π/2`. The far part
//! `(1−χ)k` is smooth and summed directly on the grid, ring by ring with FFT convolutions.
//! The near part `χk` is zonal, so by Funk–Hecke it acts on degree-`ℓ` harmonics by a scalar
//! computed once with a Gauss–Jacobi rule that absorbs the kernel singularity.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use super::basis::{gegenbauer_one, legendre};
use super::transform::SphericalTransform;
use crate::error::{Error, Result};
use crate::sphere_core::quadrature::{gauss_jacobi, gauss_legendre};
use crate::sphere_core::{GridField, GridKind, ProblemParams, QuadratureGrid};

/// Geodesic radius of the near-field bump.
pub const NEAR_RADIUS: f64 = PI / 2.0;

/// `η(x)`: 1 for `x ≤ 0`, 0 for `x ≥ 1`, `exp(2e^{−1/x}/(x−1))` between.
fn bump(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        (2.0 * (-1.0 / x).exp() / (x - 1.0)).exp()
    }
}

/// Geodesic distance from the inner product `s = ξ·ζ`.
fn dist_from_cos(s: f64) -> f64 {
    let s = s.clamp(-1.0, 1.0);
    2.0 * (2.0 - 2.0 * s).sqrt().atan2((2.0 + 2.0 * s).sqrt())
}

/// Smooth far-field kernel `(1−χ(d)) (2−2s)^{(2σ−n)/2}`.
fn far_kernel(s: f64, e: f64) -> f64 {
    let cut = 1.0 - bump(dist_from_cos(s) / NEAR_RADIUS);
    if cut == 0.0 {
        0.0
    } else {
        cut * (2.0 - 2.0 * s).max(0.0).powf(0.5 * e)
    }
}

/// Funk–Hecke multipliers of the near kernel `χ(d)|ξ−ζ|^{2σ−n}` for degrees `0..=L`.
fn near_multipliers(params: &ProblemParams, max_degree: usize) -> Vec<f64> {
    let e = params.kernel_exponent();
    let c0 = NEAR_RADIUS.cos();
    let h = 0.5 * (1.0 - c0);
    let q = 2 * max_degree + 96;
    let n = params.n;
    // (1−s)^{e/2} (and √(1−s) for S³) go into the Jacobi weight
    let alpha = if n == 2 { 0.5 * e } else { 0.5 * e + 0.5 };
    let rule = gauss_jacobi(q, alpha, 0.0);
    let scale = 2f64.powf(0.5 * e) * h.powf(alpha + 1.0);
    let mut out = vec![0.0; max_degree + 1];
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let s = c0 + h * (x + 1.0);
        let chi = bump(dist_from_cos(s) / NEAR_RADIUS);
        if chi == 0.0 {
            continue;
        }
        if n == 2 {
            let p = legendre(max_degree, s);
            for (o, pl) in out.iter_mut().zip(&p) {
                *o += w * chi * pl;
            }
        } else {
            let u = gegenbauer_one(max_degree, s);
            let extra = (1.0 + s).sqrt();
            for (l, (o, ul)) in out.iter_mut().zip(&u).enumerate() {
                *o += w * chi * extra * ul / (l as f64 + 1.0);
            }
        }
    }
    let fiber = if n == 2 { 2.0 * PI } else { 4.0 * PI };
    out.iter_mut().for_each(|o| *o *= fiber * scale);
    out
}

enum FarField {
    /// Product `S²` grid: per ring pair, the DFT of the azimuthal kernel (real, even).
    Rings {
        rings: usize,
        m: usize,
        ghat: Vec<f64>,
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
    },
    /// Zonal data: dense matrix on axial groups.
    Zonal { groups: Vec<(usize, usize)>, matrix: Vec<f64> },
}

/// Precomputed Riesz potential operator on one grid.
pub struct RieszOperator {
    params: ProblemParams,
    grid: Arc<QuadratureGrid>,
    transform: SphericalTransform,
    near: Vec<f64>,
    far: FarField,
}

impl std::fmt::Debug for RieszOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RieszOperator").field("params", &self.params).field("transform", &self.transform).finish()
    }
}

impl RieszOperator {
    pub fn new(grid: &Arc<QuadratureGrid>, params: &ProblemParams) -> Result<Self> {
        if grid.n() != params.n {
            return Err(Error::InvalidArgument(format!("grid is for n={} but params have n={}", grid.n(), params.n)));
        }
        let transform = SphericalTransform::new(grid, grid.max_transform_degree())?;
        let near = near_multipliers(params, transform.max_degree());
        let e = params.kernel_exponent();
        let far = if grid.n() == 2 && grid.kind() == GridKind::Product {
            let m = grid.ring_size();
            let rings = grid.ring_count();
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(m);
            let inv = planner.plan_fft_inverse(m);
            let half = m / 2 + 1;
            let cos: Vec<f64> = (0..m).map(|l| (2.0 * PI * l as f64 / m as f64).cos()).collect();
            let ghat: Vec<f64> = (0..rings * rings)
                .into_par_iter()
                .flat_map_iter(|ij| {
                    let (i, j) = (ij / rings, ij % rings);
                    let (zi, zj) = (grid.axial(i * m), grid.axial(j * m));
                    let rr = (1.0 - zi * zi).max(0.0).sqrt() * (1.0 - zj * zj).max(0.0).sqrt();
                    let wj = grid.weights()[j * m];
                    let mut buf: Vec<Complex64> =
                        cos.iter().map(|c| Complex64::new(wj * far_kernel(rr * c + zi * zj, e), 0.0)).collect();
                    fwd.process(&mut buf);
                    buf.into_iter().take(half).map(|c| c.re)
                })
                .collect();
            FarField::Rings { rings, m, ghat, fwd, inv }
        } else {
            zonal_far_field(grid, e)
        };
        Ok(Self { params: *params, grid: grid.clone(), transform, near, far })
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    /// Near-field multipliers per degree (without the constant `c_{n,σ}`).
    pub fn near_multipliers(&self) -> &[f64] {
        &self.near
    }

    /// Potential of grid values. Non-zonal input on an `S³` grid is rejected.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.grid.len() {
            return Err(Error::InvalidArgument("value count does not match the grid".into()));
        }
        let near_c = self.transform.analyze_values(f).scale_degrees(|k| self.near[k]);
        let near = self.transform.synthesize_values(&near_c);
        let far = match &self.far {
            FarField::Rings { rings, m, ghat, fwd, inv } => {
                let (rings, m) = (*rings, *m);
                let half = m / 2 + 1;
                let modes: Vec<Vec<Complex64>> = f
                    .par_chunks(m)
                    .map(|ring| {
                        let mut buf: Vec<Complex64> = ring.iter().map(|v| Complex64::new(*v, 0.0)).collect();
                        fwd.process(&mut buf);
                        buf
                    })
                    .collect();
                let mut out = vec![0.0; f.len()];
                out.par_chunks_mut(m).enumerate().for_each(|(i, ring)| {
                    let mut acc = vec![Complex64::new(0.0, 0.0); m];
                    for (j, fj) in modes.iter().enumerate() {
                        let g = &ghat[(i * rings + j) * half..(i * rings + j + 1) * half];
                        for (k, a) in acc.iter_mut().enumerate() {
                            *a += fj[k] * g[k.min(m - k)];
                        }
                    }
                    inv.process(&mut acc);
                    ring.iter_mut().zip(&acc).for_each(|(o, v)| *o = v.re / m as f64);
                });
                out
            }
            FarField::Zonal { groups, matrix } => {
                let gv = group_values(f, groups)?;
                let g = groups.len();
                let mut out = vec![0.0; f.len()];
                for (i, (a, b)) in groups.iter().enumerate() {
                    let v: f64 = (0..g).map(|j| matrix[i * g + j] * gv[j]).sum();
                    out[*a..*b].iter_mut().for_each(|o| *o = v);
                }
                out
            }
        };
        let c = self.params.c_riesz;
        Ok(far.iter().zip(&near).map(|(a, b)| c * (a + b)).collect())
    }

    pub fn apply_field(&self, f: &GridField) -> Result<GridField> {
        GridField::new(self.grid.clone(), self.apply(f.values())?)
    }
}

/// Zonal far-field matrix: weight of source group `j` seen from target group `i`.
fn zonal_far_field(grid: &Arc<QuadratureGrid>, e: f64) -> FarField {
    let n = grid.n();
    let groups: Vec<(usize, usize)> = match grid.kind() {
        GridKind::Zonal => (0..grid.len()).map(|i| (i, i + 1)).collect(),
        GridKind::Product => {
            let block = grid.len() / grid.height_rule().expect("S³ grid").len();
            (0..grid.len() / block).map(|a| (a * block, (a + 1) * block)).collect()
        }
    };
    let axial: Vec<f64> = groups.iter().map(|(a, _)| grid.axial(*a)).collect();
    let gw: Vec<f64> = groups.iter().map(|(a, b)| grid.weights()[*a..*b].iter().sum()).collect();
    let g = groups.len();
    let res = grid.resolution();
    let matrix: Vec<f64> = if n == 2 {
        // trapezoid over the azimuth with the product grid's ring size
        let m = 2 * res;
        let cos: Vec<f64> = (0..m).map(|l| (2.0 * PI * l as f64 / m as f64).cos()).collect();
        (0..g * g)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / g, ij % g);
                let (zi, zj) = (axial[i], axial[j]);
                let rr = (1.0 - zi * zi).max(0.0).sqrt() * (1.0 - zj * zj).max(0.0).sqrt();
                gw[j] * cos.iter().map(|c| far_kernel(rr * c + zi * zj, e)).sum::<f64>() / m as f64
            })
            .collect()
    } else {
        // ∫_{S²} k(r_i r_j y₁ + u_i u_j) dy = 2π ∫_{-1}^{1} k(r_i r_j t + u_i u_j) dt
        let rule = gauss_legendre(2 * res.max(32) + 32);
        (0..g * g)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / g, ij % g);
                let (ui, uj) = (axial[i], axial[j]);
                let rr = (1.0 - ui * ui).max(0.0).sqrt() * (1.0 - uj * uj).max(0.0).sqrt();
                let avg = 0.5 * rule.integrate(|t| far_kernel(rr * t + ui * uj, e));
                gw[j] * avg
            })
            .collect()
    };
    FarField::Zonal { groups, matrix }
}

/// Common value of each axial group, rejecting data that is not zonal.
fn group_values(f: &[f64], groups: &[(usize, usize)]) -> Result<Vec<f64>> {
    let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    groups
        .iter()
        .map(|(a, b)| {
            let v0 = f[*a];
            if f[*a..*b].iter().any(|v| (v - v0).abs() > 1e-9 * scale) {
                return Err(Error::UnsupportedGrid("Riesz potential on S³ requires zonal data".into()));
            }
            Ok(v0)
        })
        .collect()
}

/// One-shot Riesz potential; build a [`RieszOperator`] to reuse the precomputation.
pub fn riesz_potential(f: &GridField, params: &ProblemParams) -> Result<GridField> {
    RieszOperator::new(f.grid(), params)?.apply_field(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_ops::eigen::OperatorSpectrum;
    use crate::spectral_ops::basis::real_harmonic;
    use crate::sphere_core::build_grid;

    #[test]
    fn bump_is_a_partition() {
        assert_eq!(bump(-0.1), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert!(bump(0.5) > 0.0 && bump(0.5) < 1.0);
        assert!((bump(1e-3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_maps_to_reciprocal_eigenvalue() {
        for (n, sigma, kind) in [(2, 0.5, GridKind::Product), (2, 0.8, GridKind::Zonal), (3, 0.9, GridKind::Zonal), (3, 0.4, GridKind::Product)] {
            let p = ProblemParams::new(n, sigma).unwrap();
            let g = Arc::new(QuadratureGrid::build(n, if n == 3 && kind == GridKind::Product { 24 } else { 48 }, kind).unwrap());
            let op = RieszOperator::new(&g, &p).unwrap();
            let out = op.apply(&vec![p.c_intertwine; g.len()]).unwrap();
            for v in out {
                assert!((v - 1.0).abs() < 1e-7, "n={n} σ={sigma} {kind:?}: {v}");
            }
        }
    }

    #[test]
    fn degree_one_is_divided_by_lambda_one() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 48).unwrap());
        let f = GridField::from_fn(&g, |x| real_harmonic(1, -1, x));
        let out = riesz_potential(&f, &p).unwrap();
        let lam1 = OperatorSpectrum::new(&p, 1).get(1);
        for (o, v) in out.values().iter().zip(f.values()) {
            assert!((o - v / lam1).abs() < 1e-7);
        }
    }

    #[test]
    fn rejects_non_zonal_s3_data() {
        let p = ProblemParams::new(3, 0.5).unwrap();
        let g = Arc::new(build_grid(3, 8).unwrap());
        let f: Vec<f64> = g.nodes().map(|x| x[0]).collect();
        assert!(RieszOperator::new(&g, &p).unwrap().apply(&f).is_err());
    }
}
