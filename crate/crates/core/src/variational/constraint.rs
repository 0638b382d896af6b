use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere_core::{GridField, GridKind, ProblemParams, QuadratureGrid};

/// A point `w = 1 + w̃ + μ + η·x` of `𝒮₀` with its constraint defects.
#[derive(Clone, Debug)]
pub struct ConstraintState {
    pub w: GridField,
    pub mu: f64,
    pub eta: Vec<f64>,
    pub norm_defect: f64,
    pub moment_defect: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub(crate) struct Corrections {
    pub mu: f64,
    pub eta: Vec<f64>,
    pub norm_defect: f64,
    pub moment_defect: Vec<f64>,
}

pub(crate) fn moment_axes(grid: &QuadratureGrid) -> Vec<usize> {
    let n = grid.n();
    match grid.kind() {
        GridKind::Product => (0..=n).collect(),
        GridKind::Zonal => vec![n],
    }
}

/// Newton solve for `(μ, η)` so that `base + μ + η·x` meets both constraints.
pub(crate) fn solve_corrections(
    grid: &QuadratureGrid,
    base: &[f64],
    q: f64,
    guess: Option<(f64, &[f64])>,
) -> Result<(Corrections, Vec<f64>)> {
    let n = grid.n();
    let axes = moment_axes(grid);
    let dim = 1 + axes.len();
    let area = grid.total_weight();
    let w8 = grid.weights();
    let mut theta = DVector::<f64>::zeros(dim);
    if let Some((mu, eta)) = guess {
        theta[0] = mu;
        for (a, &ax) in axes.iter().enumerate() {
            theta[1 + a] = eta[ax];
        }
    }
    let build = |theta: &DVector<f64>| -> Vec<f64> {
        grid.nodes()
            .zip(base)
            .map(|(x, b)| b + theta[0] + axes.iter().enumerate().map(|(a, &ax)| theta[1 + a] * x[ax]).sum::<f64>())
            .collect()
    };
    let mut w = build(&theta);
    let mut resid = f64::INFINITY;
    for _ in 0..60 {
        let mut f = DVector::<f64>::zeros(dim);
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for (i, x) in grid.nodes().enumerate() {
            let wi = w[i];
            let aw = wi.abs();
            let val = aw.powf(q);
            let der = q * aw.powf(q - 2.0) * wi;
            let mut phi = Vec::with_capacity(dim);
            phi.push(1.0);
            phi.extend(axes.iter().map(|&ax| x[ax]));
            let c = w8[i] / area;
            for a in 0..dim {
                f[a] += c * phi[a] * val;
                for b in 0..dim {
                    jac[(a, b)] += c * der * phi[a] * phi[b];
                }
            }
        }
        f[0] -= 1.0;
        resid = f.amax();
        if resid <= 1e-14 {
            break;
        }
        let step = jac
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::Singular("constraint Jacobian is singular".into()))?;
        theta -= step;
        w = build(&theta);
    }
    if !(resid <= 1e-11) {
        return Err(Error::NoConvergence { what: "projection onto the constraint manifold".into(), iterations: 60, residual: resid });
    }
    let mut eta = vec![0.0; n + 1];
    for (a, &ax) in axes.iter().enumerate() {
        eta[ax] = theta[1 + a];
    }
    let norm_defect = (grid.integrate(&w.iter().map(|v| v.abs().powf(q)).collect::<Vec<_>>()) / area - 1.0).abs();
    let moment_defect = (0..=n)
        .map(|ax| {
            if !axes.contains(&ax) {
                return 0.0;
            }
            grid.nodes().zip(&w).zip(w8).map(|((x, v), wt)| wt * x[ax] * v.abs().powf(q)).sum::<f64>() / area
        })
        .collect();
    Ok((Corrections { mu: theta[0], eta, norm_defect, moment_defect }, w))
}

/// Solves for `μ(w̃)`, `η(w̃)` so that `1 + w̃ + μ + η·x ∈ 𝒮₀`.
///
/// The Newton iteration starts from the second-order prediction
/// `μ ≈ −((q−1)/2) ⨍w̃²`, `η ≈ −((q−1)/2)(n+1) ⨍w̃² x`.
pub fn project_to_s0(w_tilde: &GridField, params: &ProblemParams) -> Result<ConstraintState> {
    let grid = w_tilde.grid();
    if w_tilde.sup_norm() > 0.3 {
        return Err(Error::InvalidArgument(format!(
            "perturbation too large for the local graph description (sup = {})",
            w_tilde.sup_norm()
        )));
    }
    let q = params.sobolev_exponent();
    let n = params.n;
    let area = grid.total_weight();
    let wt = w_tilde.values();
    let msq = grid.integrate(&wt.iter().map(|v| v * v).collect::<Vec<_>>()) / area;
    let mu0 = -0.5 * (q - 1.0) * msq;
    let axes = moment_axes(grid);
    let eta0: Vec<f64> = (0..=n)
        .map(|ax| {
            if !axes.contains(&ax) {
                return 0.0;
            }
            let m = grid.nodes().zip(wt).zip(grid.weights()).map(|((x, v), w)| w * v * v * x[ax]).sum::<f64>() / area;
            -0.5 * (q - 1.0) * (n as f64 + 1.0) * m
        })
        .collect();
    let base: Vec<f64> = wt.iter().map(|v| 1.0 + v).collect();
    let (c, w) = solve_corrections(grid, &base, q, Some((mu0, &eta0)))?;
    Ok(ConstraintState {
        w: GridField::new(grid.clone(), w)?,
        mu: c.mu,
        eta: c.eta,
        norm_defect: c.norm_defect,
        moment_defect: c.moment_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_ops::real_harmonic;
    use crate::sphere_core::build_grid;
    use std::sync::Arc;

    #[test]
    fn zero_perturbation_is_fixed() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 8).unwrap());
        let s = project_to_s0(&GridField::constant(&g, 0.0), &p).unwrap();
        assert_eq!(s.mu, 0.0);
        assert!(s.eta.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn constraints_met_and_mu_matches_expansion() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 16).unwrap());
        let q = p.sobolev_exponent();
        let mut ratios = Vec::new();
        for amp in [0.1, 0.02, 0.004] {
            let wt = GridField::from_fn(&g, |x| amp * real_harmonic(2, 1, x));
            let s = project_to_s0(&wt, &p).unwrap();
            assert!(s.norm_defect <= 1e-9);
            assert!(s.moment_defect.iter().all(|m| m.abs() <= 1e-9));
            let pred = -0.5 * (q - 1.0) * wt.abs_pow_mean(2.0);
            ratios.push(s.mu / pred);
        }
        let errs: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1] && errs[2] < 1e-2, "{ratios:?}");
    }
}
