use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::constraint::{moment_axes, solve_corrections, ConstraintState, Corrections};
use super::multipliers::MultiplierReport;
use super::workspace::SpectralWorkspace;
use crate::error::{Error, Result};
use crate::spectral_ops::SpectralField;
use crate::sphere_core::{GridField, ProblemParams};

#[derive(Clone, Debug, Serialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Stop when `(⨍ |Π g_red|²)^{1/2}` falls below this.
    pub tol: f64,
    /// Harmonic degree of the Galerkin space (default: what the grid supports).
    pub max_degree: Option<usize>,
    /// Admissible `‖K − 1‖_∞`.
    pub k_radius: f64,
    /// Admissible `‖w − 1‖_∞`.
    pub w_radius: f64,
    pub newton_polish: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { max_iters: 200, tol: 1e-10, max_degree: None, k_radius: 0.1, w_radius: 0.3, newton_polish: true }
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub w: GridField,
    pub report: MultiplierReport,
    pub constraint: ConstraintState,
    pub energy: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// `(⨍ (w−1) P_σ (w−1))^{1/2}`.
    pub distance: f64,
    /// `distance / inf_c (⨍|K−c|^{2n/(n+2σ)})^{(n+2σ)/2n}`; NaN when `K` is constant.
    pub distance_ratio: f64,
    /// Coefficients of the degree ≥ 2 part of `w`.
    pub tangent_coefficients: Vec<f64>,
    pub max_degree: usize,
}

/// Smallest generalized eigenvalues of the tangent Hessian against `⨍ h P_σ h`.
#[derive(Clone, Debug, Serialize)]
pub struct HessianCheck {
    pub min_eigenvalue: f64,
    /// `2(1 − λ₁/λ₂)`.
    pub coercivity_bound: f64,
    pub eigenvalues: Vec<f64>,
}

struct Problem<'a> {
    ws: &'a SpectralWorkspace,
    k: &'a [f64],
    free: Vec<usize>,
    q: f64,
    lambda1: f64,
}

struct Point {
    w: Vec<f64>,
    corr: Corrections,
    energy: f64,
}

impl<'a> Problem<'a> {
    fn new(ws: &'a SpectralWorkspace, k: &'a [f64]) -> Self {
        let basis = ws.transform.basis();
        let len = basis.len(ws.max_degree());
        let free = (0..len).filter(|&i| basis.degree_of(i) >= 2).collect();
        let lambda1 = ws.spectrum.get(1);
        Self { ws, k, free, q: ws.params.sobolev_exponent(), lambda1 }
    }

    fn point(&self, c: &[f64], guess: Option<&Corrections>) -> Result<Point> {
        let mut field = SpectralField::zeros(self.ws.transform.basis(), self.ws.max_degree());
        for (v, &i) in c.iter().zip(&self.free) {
            field.coeffs_mut()[i] = *v;
        }
        let base: Vec<f64> = self.ws.synthesize(&field).into_iter().map(|v| 1.0 + v).collect();
        let (corr, w) = solve_corrections(self.ws.grid(), &base, self.q, guess.map(|g| (g.mu, g.eta.as_slice())))?;
        let energy = self.ws.energy(&w, self.k)?;
        Ok(Point { w, corr, energy })
    }

    /// Coefficients of the reduced gradient on the free degrees.
    fn reduced_gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        let ws = self.ws;
        let grid = ws.grid();
        let g = ws.energy_gradient(w, self.k)?;
        let axes = moment_axes(grid);
        let dim = 1 + axes.len();
        let phi = |x: &[f64], a: usize| if a == 0 { 1.0 } else { x[axes[a - 1]] };
        let dw: Vec<f64> = w.iter().map(|v| self.q * v.abs().powf(self.q - 2.0) * v).collect();
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        let mut r = DVector::<f64>::zeros(dim);
        let area = ws.area();
        for (i, (x, wt)) in grid.nodes().zip(grid.weights()).enumerate() {
            let c = wt / area;
            for a in 0..dim {
                r[a] += c * g[i] * phi(x, a);
                for b in 0..dim {
                    jac[(a, b)] += c * dw[i] * phi(x, a) * phi(x, b);
                }
            }
        }
        let beta = jac.lu().solve(&r).ok_or_else(|| Error::Singular("constraint Jacobian is singular".into()))?;
        let gred: Vec<f64> = grid
            .nodes()
            .enumerate()
            .map(|(i, x)| g[i] - (0..dim).map(|a| beta[a] * dw[i] * phi(x, a)).sum::<f64>())
            .collect();
        let c = ws.analyze(&gred);
        Ok(self.free.iter().map(|&i| c.coeffs()[i]).collect())
    }

    fn degree(&self, j: usize) -> usize {
        self.ws.transform.basis().degree_of(self.free[j])
    }

    /// `ω·Hess E` in the free coefficients, by central differences of the reduced gradient.
    fn hessian(&self, c: &[f64], guess: &Corrections) -> Result<DMatrix<f64>> {
        let d = c.len();
        let h = 1e-5;
        let mut hess = DMatrix::<f64>::zeros(d, d);
        let mut cp = c.to_vec();
        for b in 0..d {
            cp[b] = c[b] + h;
            let gp = self.reduced_gradient(&self.point(&cp, Some(guess))?.w)?;
            cp[b] = c[b] - h;
            let gm = self.reduced_gradient(&self.point(&cp, Some(guess))?.w)?;
            cp[b] = c[b];
            for a in 0..d {
                hess[(a, b)] = (gp[a] - gm[a]) / (2.0 * h);
            }
        }
        Ok(0.5 * (&hess + hess.transpose()))
    }
}

/// Local minimizer of `E_K` on `𝒮₀` near `w ≡ 1`.
///
/// Galerkin unknowns are the degree ≥ 2 coefficients of `w`; `μ` and `η` follow from the
/// constraints. Descent uses the reduced gradient preconditioned by `2(λ_k − λ₁)` (the exact
/// Hessian at `K ≡ 1`) with an Armijo line search, then optional Newton steps on a
/// finite-difference Hessian.
pub fn minimize_ek_near_1(k: &GridField, params: &ProblemParams, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    let grid = k.grid();
    let kdev = k.values().iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    if kdev > opts.k_radius {
        return Err(Error::TrustRegion(format!("‖K − 1‖∞ = {kdev} exceeds {}", opts.k_radius)));
    }
    let l = opts.max_degree.unwrap_or(grid.max_transform_degree()).min(grid.max_transform_degree());
    let ws = SpectralWorkspace::with_degree(grid, params, l)?;
    let prob = Problem::new(&ws, k.values());
    let area = ws.area();
    let mut c = vec![0.0; prob.free.len()];
    let mut pt = prob.point(&c, None)?;
    let mut grad = prob.reduced_gradient(&pt.w)?;
    let gnorm = |g: &[f64]| (g.iter().map(|v| v * v).sum::<f64>() / area).sqrt();
    let mut iterations = 0;
    while iterations < opts.max_iters && gnorm(&grad) > opts.tol {
        iterations += 1;
        let dir: Vec<f64> = grad
            .iter()
            .enumerate()
            .map(|(j, g)| -g / (2.0 * (ws.spectrum.get(prob.degree(j)) - prob.lambda1)))
            .collect();
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>() / area;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = c.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            if let Ok(p) = prob.point(&trial, Some(&pt.corr)) {
                if p.energy <= pt.energy + 1e-4 * alpha * slope {
                    accepted = Some((trial, p));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, p)) = accepted else {
            // no decrease representable in floating point: converged as far as energy can tell
            break;
        };
        c = trial;
        pt = p;
        let dev = pt.w.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
        if dev > opts.w_radius {
            return Err(Error::TrustRegion(format!("‖w − 1‖∞ = {dev} exceeds {}", opts.w_radius)));
        }
        grad = prob.reduced_gradient(&pt.w)?;
    }
    if opts.newton_polish && gnorm(&grad) > opts.tol && c.len() <= 400 {
        for _ in 0..3 {
            let hess = prob.hessian(&c, &pt.corr)?;
            let Some(step) = hess.lu().solve(&DVector::from_vec(grad.iter().map(|g| -g).collect())) else {
                break;
            };
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
            let p = prob.point(&trial, Some(&pt.corr))?;
            let g = prob.reduced_gradient(&p.w)?;
            if gnorm(&g) >= gnorm(&grad) {
                break;
            }
            c = trial;
            pt = p;
            grad = g;
            iterations += 1;
            if gnorm(&grad) <= opts.tol {
                break;
            }
        }
    }
    let gradient_norm = gnorm(&grad);
    if gradient_norm > opts.tol {
        return Err(Error::NoConvergence { what: "constrained minimization of E_K".into(), iterations, residual: gradient_norm });
    }
    if let Some(i) = pt.w.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Negativity(format!("minimizer is not positive at node {i}")));
    }
    let report = ws.multipliers(&pt.w, k.values())?;
    let dw: Vec<f64> = pt.w.iter().map(|v| v - 1.0).collect();
    let distance = ws.quadratic_form(&dw).max(0.0).sqrt();
    let kdist = inf_lr_distance(k, params);
    let w = GridField::new(grid.clone(), pt.w)?;
    Ok(MinimizeResult {
        constraint: ConstraintState {
            w: w.clone(),
            mu: pt.corr.mu,
            eta: pt.corr.eta,
            norm_defect: pt.corr.norm_defect,
            moment_defect: pt.corr.moment_defect,
        },
        w,
        report,
        energy: pt.energy,
        iterations,
        gradient_norm,
        distance,
        distance_ratio: if kdist > 0.0 { distance / kdist } else { f64::NAN },
        tangent_coefficients: c,
        max_degree: l,
    })
}

/// `inf_c (⨍|K − c|^r)^{1/r}` with `r = 2n/(n+2σ)`, by golden-section search.
fn inf_lr_distance(k: &GridField, params: &ProblemParams) -> f64 {
    let r = 2.0 * params.nf() / (params.nf() + 2.0 * params.sigma);
    let f = |c: f64| k.map(|v| v - c).abs_pow_mean(r).powf(1.0 / r);
    let (mut a, mut b) = (k.min(), k.max());
    if b - a <= 0.0 {
        return 0.0;
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    f(0.5 * (a + b))
}

/// Generalized eigenvalues of the tangent Hessian of `E_K` at a minimizer, against the
/// quadratic form `⨍ h P_σ h`.
pub fn tangent_hessian_spectrum(k: &GridField, params: &ProblemParams, result: &MinimizeResult) -> Result<HessianCheck> {
    let ws = SpectralWorkspace::with_degree(k.grid(), params, result.max_degree)?;
    let prob = Problem::new(&ws, k.values());
    let pt = prob.point(&result.tangent_coefficients, None)?;
    let hess = prob.hessian(&result.tangent_coefficients, &pt.corr)?;
    let d = hess.nrows();
    let scale: Vec<f64> = (0..d).map(|j| 1.0 / ws.spectrum.get(prob.degree(j)).sqrt()).collect();
    let a = DMatrix::from_fn(d, d, |i, j| scale[i] * hess[(i, j)] * scale[j]);
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let bound = 2.0 * (1.0 - ws.spectrum.get(1) / ws.spectrum.get(2));
    Ok(HessianCheck { min_eigenvalue: eigenvalues[0], coercivity_bound: bound, eigenvalues })
}



#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_core::{build_grid, GridKind, QuadratureGrid};
    use std::sync::Arc;

    #[test]
    fn constant_k_gives_constant_minimizer() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 8).unwrap());
        let r = minimize_ek_near_1(&GridField::constant(&g, 1.0), &p, &MinimizeOptions::default()).unwrap();
        assert!(r.w.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((r.energy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn distance_scales_linearly_in_eps() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(QuadratureGrid::build(2, 24, GridKind::Zonal).unwrap());
        let run = |eps: f64| {
            let k = GridField::from_fn(&g, |x| 1.0 + eps * (x[2] * x[2] - 1.0 / 3.0));
            minimize_ek_near_1(&k, &p, &MinimizeOptions::default()).unwrap()
        };
        let a = run(0.05);
        let b = run(0.025);
        assert!(a.w.min() > 0.0 && b.w.min() > 0.0);
        let ratio = b.distance / a.distance;
        assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn hessian_is_coercive_at_constant() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 8).unwrap());
        let k = GridField::constant(&g, 1.0);
        let opts = MinimizeOptions { max_degree: Some(4), ..Default::default() };
        let r = minimize_ek_near_1(&k, &p, &opts).unwrap();
        let h = tangent_hessian_spectrum(&k, &p, &r).unwrap();
        assert!((h.coercivity_bound - 0.8).abs() < 1e-12);
        assert!((h.min_eigenvalue - 0.8).abs() < 1e-6, "{}", h.min_eigenvalue);
    }
}
