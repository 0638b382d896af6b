use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::constraint::moment_axes;
use super::workspace::SpectralWorkspace;
use crate::error::{Error, Result};
use crate::spectral_ops::HarmonicBasis;
use crate::sphere_core::{tangential, GridField, GridKind, ProblemParams, SphereFunction};

/// Multipliers of `P_σ w = (λ K − Λ·x) w^{q−1}` and the residual of that equation.
#[derive(Clone, Debug, Serialize)]
pub struct MultiplierReport {
    pub lambda_p: f64,
    #[serde(rename = "Lambda_p")]
    pub big_lambda: Vec<f64>,
    /// `(∫ |P_σ w − (λK − Λ·x) w^{q−1}|²)^{1/2}`.
    pub euler_lagrange_residual: f64,
}

impl SpectralWorkspace {
    /// `⟨∇K, ∇x_i⟩` at every node via `½(Δ(K x_i) + n K x_i − x_i ΔK)`.
    pub fn grad_dot_coordinate(&self, k: &[f64], axis: usize) -> Result<Vec<f64>> {
        let grid = self.grid();
        let zonal_ok = axis == self.params.n && grid.kind() == GridKind::Zonal;
        if self.transform.basis() != HarmonicBasis::RealS2 && !zonal_ok {
            return Err(Error::UnsupportedGrid(
                "spectral gradients on S³ are limited to zonal grids and the x₄ direction".into(),
            ));
        }
        let n = self.params.nf();
        let kx: Vec<f64> = grid.nodes().zip(k).map(|(x, v)| v * x[axis]).collect();
        let lap_kx = self.laplacian(&kx);
        let lap_k = self.laplacian(k);
        Ok(grid
            .nodes()
            .enumerate()
            .map(|(i, x)| 0.5 * (lap_kx[i] + n * kx[i] - x[axis] * lap_k[i]))
            .collect())
    }

    /// `∫ ⟨∇K, ∇x_i⟩ v^q` for `i = 1..n+1`.
    pub fn kazdan_warner(&self, v: &[f64], k: &[f64]) -> Result<Vec<f64>> {
        let q = self.params.sobolev_exponent();
        let grid = self.grid();
        let vq: Vec<f64> = v.iter().map(|a| a.abs().powf(q)).collect();
        let axes = moment_axes(grid);
        (0..=self.params.n)
            .map(|ax| {
                if !axes.contains(&ax) {
                    return Ok(0.0);
                }
                let g = self.grad_dot_coordinate(k, ax)?;
                Ok(grid.integrate(&g.iter().zip(&vq).map(|(a, b)| a * b).collect::<Vec<_>>()))
            })
            .collect()
    }

    pub fn multipliers(&self, w: &[f64], k: &[f64]) -> Result<MultiplierReport> {
        let q = self.params.sobolev_exponent();
        let grid = self.grid();
        let n = self.params.n;
        if let Some(i) = w.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Negativity(format!("w is not positive at node {i}")));
        }
        let lambda_p = self.quadratic_form(w) / self.mean_of(|i| k[i] * w[i].powf(q));
        let axes = moment_axes(grid);
        let wq: Vec<f64> = w.iter().map(|a| a.powf(q)).collect();
        let d = axes.len();
        let mut gram = DMatrix::<f64>::zeros(d, d);
        let mut rhs = DVector::<f64>::zeros(d);
        for (a, &ia) in axes.iter().enumerate() {
            for (b, &ib) in axes.iter().enumerate() {
                let delta = if ia == ib { 1.0 } else { 0.0 };
                gram[(a, b)] = grid
                    .nodes()
                    .zip(&wq)
                    .zip(grid.weights())
                    .map(|((x, v), wt)| wt * (delta - x[ia] * x[ib]) * v)
                    .sum();
            }
            let g = self.grad_dot_coordinate(k, ia)?;
            rhs[a] = lambda_p * grid.integrate(&g.iter().zip(&wq).map(|(a, b)| a * b).collect::<Vec<_>>());
        }
        let sol = gram
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("multiplier Gram matrix is singular".into()))?;
        let mut big_lambda = vec![0.0; n + 1];
        for (a, &ia) in axes.iter().enumerate() {
            big_lambda[ia] = sol[a];
        }
        let pw = self.apply_p(w);
        let r2: Vec<f64> = grid
            .nodes()
            .enumerate()
            .map(|(i, x)| {
                let lx: f64 = big_lambda.iter().zip(x).map(|(l, c)| l * c).sum();
                let r = pw[i] - (lambda_p * k[i] - lx) * w[i].powf(q - 1.0);
                r * r
            })
            .collect();
        Ok(MultiplierReport { lambda_p, big_lambda, euler_lagrange_residual: grid.integrate(&r2).sqrt() })
    }
}

pub fn lagrange_multipliers(w: &GridField, kphi: &GridField, params: &ProblemParams) -> Result<MultiplierReport> {
    SpectralWorkspace::new(w.grid(), params)?.multipliers(w.values(), kphi.values())
}

/// `∫ ⟨∇K, ∇x_i⟩ v^q`, with the gradient of a sampled `K` taken spectrally.
pub fn kazdan_warner_defect(v: &GridField, k: &GridField, params: &ProblemParams) -> Result<Vec<f64>> {
    SpectralWorkspace::new(v.grid(), params)?.kazdan_warner(v.values(), k.values())
}

/// `∫ ⟨∇K, ∇x_i⟩ v^q` using the gradient supplied by `k`.
pub fn kazdan_warner_defect_fn(v: &GridField, k: &dyn SphereFunction, params: &ProblemParams) -> Vec<f64> {
    let q = params.sobolev_exponent();
    let grid = v.grid();
    let axes = moment_axes(grid);
    let mut out = vec![0.0; params.n + 1];
    for ((x, vi), wt) in grid.nodes().zip(v.values()).zip(grid.weights()) {
        let g = tangential(k.gradient(x), x);
        let vq = vi.abs().powf(q);
        for &ax in &axes {
            out[ax] += wt * g[ax] * vq;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_core::{build_grid, bubble, FnSphere, MoebiusParams, QuadratureGrid, SpherePoint};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn constant_field_has_trivial_multipliers() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 10).unwrap());
        let one = GridField::constant(&g, 1.0);
        let r = lagrange_multipliers(&one, &one, &p).unwrap();
        assert!((r.lambda_p - 0.5).abs() < 1e-13);
        assert!(r.big_lambda.iter().all(|l| l.abs() < 1e-12));
        assert!(r.euler_lagrange_residual < 1e-9);
    }

    #[test]
    fn linear_k_multiplier_on_constant() {
        let eps = 0.05;
        for (n, kind) in [(2, GridKind::Product), (2, GridKind::Zonal), (3, GridKind::Zonal)] {
            let p = ProblemParams::new(n, 0.5).unwrap();
            let g = Arc::new(QuadratureGrid::build(n, 12, kind).unwrap());
            let one = GridField::constant(&g, 1.0);
            let k = GridField::from_fn(&g, |x| 1.0 + eps * x[n]);
            let r = lagrange_multipliers(&one, &k, &p).unwrap();
            assert!((r.big_lambda[n] - p.c_intertwine * eps).abs() < 1e-12, "{:?}", r.big_lambda);
            assert!(r.big_lambda[..n].iter().all(|l| l.abs() < 1e-12));
        }
    }

    #[test]
    fn kazdan_warner_moment() {
        let eps = 0.3;
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 12).unwrap());
        let one = GridField::constant(&g, 1.0);
        let k = GridField::from_fn(&g, |x| 1.0 + eps * x[2]);
        let d = kazdan_warner_defect(&one, &k, &p).unwrap();
        assert!((d[2] - 8.0 * PI * eps / 3.0).abs() < 1e-12);
        let kf = FnSphere(move |x: &[f64]| 1.0 + eps * x[2]);
        let d2 = kazdan_warner_defect_fn(&one, &kf, &p);
        assert!((d2[2] - 8.0 * PI * eps / 3.0).abs() < 1e-8);
    }

    #[test]
    fn kazdan_warner_vanishes_for_constant_k_on_bubble() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 24).unwrap());
        let m = MoebiusParams::new(SpherePoint::normalized(vec![1.0, 1.0, 0.0]).unwrap(), 2.0).unwrap();
        let b = bubble(&g, &m, &p);
        let d = kazdan_warner_defect(&b, &GridField::constant(&g, 1.0), &p).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-12));
    }
}
