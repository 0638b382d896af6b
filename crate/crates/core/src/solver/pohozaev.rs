//! Pohozaev balance on a ball of the chart centered at a concentration point.
//!
//! With `u = H·(v∘F)` and `K_eff = c_{n,σ}c(n,σ)·(K∘F)·a^n·H^{−(p+1)}`, the flat equation is
//! `u = ∫ K_eff u^p |x−y|^{2σ−n} dy`. Splitting `u` into the potential of `B_R` plus the
//! exterior part `h`, and testing with `x·∇u`, gives
//!
//! `(hg − n/(p+1))∫K_eff u^{p+1} − (1/(p+1))∫(x·∇K_eff)u^{p+1} + (R/(p+1))∮K_eff u^{p+1}
//!   − hg∫K_eff u^p h − R∮h K_eff u^p + ∫h[nK_eff u^p + x·∇(K_eff u^p)] = 0`,
//!
//! with `hg = (n−2σ)/2`. The exterior potential is computed mode by mode in angle.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::chart_view::ChartView;
use crate::error::{Error, Result};
use crate::spectral_ops::{analyze, SpectralField, SphericalTransform};
use crate::sphere_core::quadrature::{gauss_legendre, Rule1d};
use crate::sphere_core::{GridField, ProblemParams, QuadratureGrid, SpherePoint};

/// Largest ball radius (in chart units) accepted.
pub const MAX_BALL_RADIUS: f64 = 3.0;

const FD_STEP: f64 = 1e-5;

/// The individual terms of the balance and their combination.
#[derive(Clone, Debug, Serialize)]
pub struct PohozaevTerms {
    pub bulk: f64,
    pub gradient: f64,
    pub boundary: f64,
    pub interior_h: f64,
    pub exterior_h: f64,
    pub residual: f64,
}

/// Residual of the balance at the critical exponent.
pub fn pohozaev_residual(
    v: &GridField,
    k: &GridField,
    center: &SpherePoint,
    r_ball: f64,
    params: &ProblemParams,
) -> Result<f64> {
    Ok(pohozaev_terms(v, k, center, r_ball, params, params.critical_exponent())?.residual)
}

/// Angular sampling of `S^{n−1}` with its mode analysis.
enum Angular {
    Circle { m: usize },
    Sphere { transform: SphericalTransform },
}

impl Angular {
    fn new(n: usize) -> Result<Self> {
        Ok(match n {
            2 => Angular::Circle { m: 64 },
            _ => {
                let g = Arc::new(QuadratureGrid::product(2, 16)?);
                Angular::Sphere { transform: SphericalTransform::new(&g, 15)? }
            }
        })
    }

    fn directions(&self) -> Vec<Vec<f64>> {
        match self {
            Angular::Circle { m } => (0..*m)
                .map(|j| {
                    let a = 2.0 * std::f64::consts::PI * j as f64 / *m as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
            Angular::Sphere { transform } => transform.grid().nodes().map(|x| x.to_vec()).collect(),
        }
    }

    /// Weights integrating over `S^{n−1}`.
    fn weights(&self) -> Vec<f64> {
        match self {
            Angular::Circle { m } => vec![2.0 * std::f64::consts::PI / *m as f64; *m],
            Angular::Sphere { transform } => transform.grid().weights().to_vec(),
        }
    }

    fn max_degree(&self) -> usize {
        match self {
            Angular::Circle { m } => m / 2 - 1,
            Angular::Sphere { transform } => transform.max_degree(),
        }
    }

    /// Degree of each mode coefficient.
    fn degrees(&self) -> Vec<usize> {
        match self {
            Angular::Circle { m } => {
                let mut d = vec![0];
                for l in 1..m / 2 {
                    d.push(l);
                    d.push(l);
                }
                d
            }
            Angular::Sphere { transform } => {
                let b = transform.basis();
                (0..b.len(transform.max_degree())).map(|i| b.degree_of(i)).collect()
            }
        }
    }

    fn analyze(&self, g: &[f64]) -> Vec<f64> {
        match self {
            Angular::Circle { m } => {
                let mf = *m as f64;
                let mut c = vec![g.iter().sum::<f64>() / mf];
                for l in 1..m / 2 {
                    let (mut a, mut b) = (0.0, 0.0);
                    for (j, v) in g.iter().enumerate() {
                        let t = 2.0 * std::f64::consts::PI * (l * j) as f64 / mf;
                        a += v * t.cos();
                        b += v * t.sin();
                    }
                    c.push(2.0 * a / mf);
                    c.push(2.0 * b / mf);
                }
                c
            }
            Angular::Sphere { transform } => transform.analyze_values(g).into_coeffs(),
        }
    }

    fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        match self {
            Angular::Circle { m } => (0..*m)
                .map(|j| {
                    let mut acc = c[0];
                    for l in 1..m / 2 {
                        let t = 2.0 * std::f64::consts::PI * (l * j) as f64 / *m as f64;
                        acc += c[2 * l - 1] * t.cos() + c[2 * l] * t.sin();
                    }
                    acc
                })
                .collect(),
            Angular::Sphere { transform } => {
                let f = SpectralField::from_coeffs(transform.basis(), transform.max_degree(), c.to_vec())
                    .expect("coefficient count matches the basis");
                transform.synthesize_values(&f)
            }
        }
    }
}

/// Funk–Hecke multipliers `A_ℓ(r, s)` of `|rθ − sω|^{e}` on `S^{n−1}`, `ℓ = 0..=lmax`.
fn funk_hecke(n: usize, e: f64, r: f64, s: f64, lmax: usize, rule: &Rule1d) -> Vec<f64> {
    use std::f64::consts::PI;
    let eps = ((r - s).abs() / (r * s).sqrt()).max(1e-14);
    let mut edges = vec![0.0];
    if eps < 0.5 {
        let mut x = eps;
        while x < 0.5 {
            edges.push(x);
            x *= 2.0;
        }
    }
    let start = *edges.last().expect("edges start at zero");
    let pieces = ((PI - start) / (PI / 8.0)).ceil().max(1.0) as usize;
    for j in 1..=pieces {
        edges.push(start + (PI - start) * j as f64 / pieces as f64);
    }
    let mut out = vec![0.0; lmax + 1];
    let mut g = vec![0.0; lmax + 1];
    for w in edges.windows(2) {
        let seg = rule.mapped(w[0], w[1]);
        for (a, wt) in seg.nodes.iter().zip(&seg.weights) {
            let half = (a / 2.0).sin();
            let d2 = (r - s) * (r - s) + 4.0 * r * s * half * half;
            let kern = d2.powf(e / 2.0);
            let c = a.cos();
            let factor = if n == 2 {
                g[0] = 1.0;
                if lmax >= 1 {
                    g[1] = c;
                }
                for l in 2..=lmax {
                    g[l] = 2.0 * c * g[l - 1] - g[l - 2];
                }
                2.0
            } else {
                g[0] = 1.0;
                if lmax >= 1 {
                    g[1] = c;
                }
                for l in 2..=lmax {
                    let lf = l as f64;
                    g[l] = ((2.0 * lf - 1.0) * c * g[l - 1] - (lf - 1.0) * g[l - 2]) / lf;
                }
                2.0 * PI * a.sin()
            };
            let base = wt * kern * factor;
            for (o, gl) in out.iter_mut().zip(&g) {
                *o += base * gl;
            }
        }
    }
    out
}

/// Gauss–Legendre nodes on `[0, R]` with dyadic panels refined toward the origin down to a
/// fraction of the concentration length `scale`, and toward `R`.
fn ball_radial_rule(r_ball: f64, scale: f64) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(12);
    let half = r_ball / 2.0;
    let inner = (half / (scale / 16.0)).log2().ceil().clamp(3.0, 40.0) as i32;
    let mut edges = vec![0.0];
    for k in (1..=inner).rev() {
        edges.push(half / 2f64.powi(k));
    }
    edges.push(half);
    for k in 1..=8 {
        edges.push(r_ball - half / 2f64.powi(k));
    }
    edges.push(r_ball);
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let seg = rule.mapped(w[0], w[1]);
        out.extend(seg.nodes.iter().cloned().zip(seg.weights.iter().cloned()));
    }
    out
}

/// Nodes `s > R` with weights for `∫_R^∞ g(s) s^{n−1} ds` through `τ = R/s`.
fn exterior_rule(r_ball: f64, n: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(24);
    let mut out = Vec::new();
    let mut push = |tau: f64, dtau: f64| {
        let s = r_ball / tau;
        out.push((s, dtau * r_ball / (tau * tau) * s.powi(n as i32 - 1)));
    };
    let near_zero = rule.mapped(0.0, 0.5);
    for (t, w) in near_zero.nodes.iter().zip(&near_zero.weights) {
        push(*t, *w);
    }
    let grade = 4.0;
    let unit = rule.mapped(0.0, 1.0);
    for (rho, w) in unit.nodes.iter().zip(&unit.weights) {
        let tau = 1.0 - 0.5 * rho.powf(grade);
        push(tau, w * 0.5 * grade * rho.powf(grade - 1.0));
    }
    out
}

struct FlatData<'a> {
    v: &'a ChartView,
    k: &'a ChartView,
    params: &'a ProblemParams,
    p: f64,
}

impl FlatData<'_> {
    /// `(u, K_eff)` at `x`.
    fn at(&self, x: &[f64]) -> (f64, f64) {
        let n = self.params.n as i32;
        let r2: f64 = x.iter().map(|a| a * a).sum();
        let a = 2.0 / (1.0 + r2);
        let h = a.powf(self.params.half_gap());
        let u = h * self.v.sphere_value(x);
        let keff = self.params.integral_constant() * self.k.sphere_value(x) * a.powi(n) * h.powf(-(self.p + 1.0));
        (u, keff)
    }

    fn source(&self, x: &[f64]) -> f64 {
        let (u, k) = self.at(x);
        k * u.max(0.0).powf(self.p)
    }
}

/// All terms of the balance for exponent `p` on the ball `|x| ≤ r_ball` of the chart centered at `center`.
pub fn pohozaev_terms(
    v: &GridField,
    k: &GridField,
    center: &SpherePoint,
    r_ball: f64,
    params: &ProblemParams,
    p: f64,
) -> Result<PohozaevTerms> {
    if !(r_ball > 0.0 && r_ball <= MAX_BALL_RADIUS) {
        return Err(Error::InvalidArgument(format!("ball radius {r_ball} must lie in (0, {MAX_BALL_RADIUS}]")));
    }
    if !v.grid().same_layout(k.grid()) {
        return Err(Error::InvalidArgument("v and K live on different grids".into()));
    }
    if center.dim() != params.n {
        return Err(Error::InvalidArgument("center has the wrong dimension".into()));
    }
    let n = params.n;
    let vview = ChartView::from_spectral(analyze(v)?.truncated(1e-14), center, params);
    let kview = ChartView::from_spectral(analyze(k)?.truncated(1e-14), center, params);
    let data = FlatData { v: &vview, k: &kview, params, p };
    let ang = Angular::new(n)?;
    let dirs = ang.directions();
    let dw = ang.weights();
    let degrees = ang.degrees();
    let lmax = ang.max_degree();
    let e = params.kernel_exponent();
    let hg = params.half_gap();
    let nf = params.nf();
    let at = |r: f64, d: &[f64]| -> Vec<f64> { d.iter().map(|a| r * a).collect() };

    let ext = exterior_rule(r_ball, n);
    let ext_modes: Vec<Vec<f64>> = ext
        .par_iter()
        .map(|(s, _)| ang.analyze(&dirs.iter().map(|d| data.source(&at(*s, d))).collect::<Vec<_>>()))
        .collect();
    let fh_rule = gauss_legendre(16);
    let h_at = |r: f64| -> Vec<f64> {
        let mut modes = vec![0.0; degrees.len()];
        for ((s, w), fm) in ext.iter().zip(&ext_modes) {
            let a = funk_hecke(n, e, r, *s, lmax, &fh_rule);
            for ((m, d), f) in modes.iter_mut().zip(&degrees).zip(fm) {
                *m += w * a[*d] * f;
            }
        }
        ang.synthesize(&modes)
    };

    let m_u = data.at(&vec![0.0; n]).0;
    let radial = ball_radial_rule(r_ball, m_u.powf(-(p - 1.0) / (2.0 * params.sigma)).min(1.0));
    let shells: Vec<[f64; 4]> = radial
        .par_iter()
        .map(|(r, wr)| {
            let h = h_at(*r);
            let mut acc = [0.0; 4];
            for ((d, w), hj) in dirs.iter().zip(&dw).zip(&h) {
                let (u, keff) = data.at(&at(*r, d));
                let (u_p, k_p) = data.at(&at(*r * (1.0 + FD_STEP), d));
                let (u_m, k_m) = data.at(&at(*r * (1.0 - FD_STEP), d));
                let up = u.powf(p);
                let f = keff * up;
                let xgk = (k_p - k_m) / (2.0 * FD_STEP);
                let xgf = (k_p * u_p.powf(p) - k_m * u_m.powf(p)) / (2.0 * FD_STEP);
                let wt = w * wr * r.powi(n as i32 - 1);
                acc[0] += wt * keff * up * u;
                acc[1] += wt * xgk * up * u;
                acc[2] += wt * f * hj;
                acc[3] += wt * hj * (nf * f + xgf);
            }
            acc
        })
        .collect();
    let mut vol = [0.0; 4];
    for s in &shells {
        for (a, b) in vol.iter_mut().zip(s) {
            *a += b;
        }
    }
    let hb = h_at(r_ball);
    let (mut bd_h, mut bd_u) = (0.0, 0.0);
    for ((d, w), hj) in dirs.iter().zip(&dw).zip(&hb) {
        let (u, keff) = data.at(&at(r_ball, d));
        let wt = w * r_ball.powi(n as i32 - 1);
        bd_h += wt * hj * keff * u.powf(p);
        bd_u += wt * keff * u.powf(p + 1.0);
    }
    let bulk = (hg - nf / (p + 1.0)) * vol[0];
    let gradient = -vol[1] / (p + 1.0);
    let boundary = r_ball * bd_u / (p + 1.0);
    let interior_h = -hg * vol[2];
    let exterior_h = -(r_ball * bd_h - vol[3]);
    let residual = (bulk + gradient + boundary + interior_h + exterior_h).abs();
    Ok(PohozaevTerms { bulk, gradient, boundary, interior_h, exterior_h, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_ops::zonal_harmonic;
    use crate::sphere_core::{bubble, GridKind, MoebiusParams};

    #[test]
    fn funk_hecke_constant_mode_matches_direct_integral() {
        let rule = gauss_legendre(16);
        let a = funk_hecke(2, -1.0, 0.7, 1.3, 4, &rule);
        let direct = gauss_legendre(400)
            .mapped(0.0, 2.0 * std::f64::consts::PI)
            .integrate(|t| (0.49 + 1.69 - 2.0 * 0.91 * t.cos()).powf(-0.5));
        assert!((a[0] - direct).abs() < 1e-12, "{} {}", a[0], direct);
    }

    #[test]
    fn constant_field_balances() {
        let g = Arc::new(QuadratureGrid::build(2, 16, GridKind::Product).unwrap());
        let pr = ProblemParams::new(2, 0.5).unwrap();
        let one = GridField::constant(&g, 1.0);
        let c = SpherePoint::normalized(vec![0.0, 0.0, 1.0]).unwrap();
        let t = pohozaev_terms(&one, &one, &c, 1.0, &pr, pr.critical_exponent()).unwrap();
        assert!(t.residual <= 1e-5, "{t:?}");
    }

    #[test]
    fn bubble_balances_and_corruption_is_detected() {
        let g = Arc::new(QuadratureGrid::build(2, 96, GridKind::Product).unwrap());
        let pr = ProblemParams::new(2, 0.5).unwrap();
        let c = SpherePoint::normalized(vec![0.3, -0.1, 0.7]).unwrap();
        let m = MoebiusParams::new(c.antipode(), 4.0).unwrap();
        let b = bubble(&g, &m, &pr);
        let one = GridField::constant(&g, 1.0);
        let base = pohozaev_residual(&b, &one, &c, 1.0, &pr).unwrap();
        assert!(base <= 1e-8, "{base}");
        let y2 = GridField::from_fn(&g, |x| {
            let z: f64 = x.iter().zip(c.coords()).map(|(a, b)| a * b).sum();
            zonal_harmonic(2, 2, z)[2]
        });
        let corrupted = b.zip_map(&y2, |a, y| a + 0.1 * y);
        let r = pohozaev_residual(&corrupted, &one, &c, 1.0, &pr).unwrap();
        assert!(r > 1e-3 && r > 1e6 * base, "{r}");
    }

    #[test]
    fn three_sphere_bubble_balances() {
        let g = Arc::new(QuadratureGrid::build(3, 64, GridKind::Zonal).unwrap());
        let pr = ProblemParams::new(3, 1.0).unwrap();
        let c = SpherePoint::north(3);
        let b = bubble(&g, &MoebiusParams::new(c.antipode(), 3.0).unwrap(), &pr);
        let one = GridField::constant(&g, 1.0);
        assert!(pohozaev_residual(&b, &one, &c, 1.0, &pr).unwrap() <= 1e-8);
    }

    #[test]
    fn oversized_ball_is_rejected() {
        let g = Arc::new(QuadratureGrid::build(2, 8, GridKind::Product).unwrap());
        let pr = ProblemParams::new(2, 0.5).unwrap();
        let one = GridField::constant(&g, 1.0);
        assert!(pohozaev_residual(&one, &one, &SpherePoint::north(2), 5.0, &pr).is_err());
    }
}
