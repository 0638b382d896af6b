use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::integrals::{gradient_estimate, hypothesis_estimates, radial_estimate, FlatnessQuadrature};
use super::model::{CurvatureSpec, LocalModel, ModelStructure};
use crate::error::{Error, Result};
use crate::sphere_core::{ProblemParams, SpherePoint};

/// Joint norms of the hypothesis vectors below this value are flagged.
pub const HYPOTHESIS_FLAG: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyOptions {
    pub quadrature: FlatnessQuadrature,
    /// Newton iterates must stay in `|η| ≤ trust_radius`.
    pub trust_radius: f64,
    pub max_iters: usize,
    /// Target sup-norm of the gradient integral at the root.
    pub tol: f64,
    /// Central-difference step of the Jacobian.
    pub fd_step: f64,
    /// Models with `|β − (n−2σ)| ≤ order_tol` are treated as critical order.
    pub order_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            quadrature: FlatnessQuadrature::default(),
            trust_radius: 5.0,
            max_iters: 50,
            tol: 1e-9,
            fd_step: 1e-4,
            order_tol: 1e-9,
        }
    }
}

/// A critical-order point with its root `η` and radial moment there.
#[derive(Clone, Debug, Serialize)]
pub struct KMinusEntry {
    pub index: usize,
    pub q0: SpherePoint,
    pub eta: Vec<f64>,
    pub radial_value: f64,
    pub radial_error: f64,
    pub gradient_residual: f64,
    pub newton_iterations: usize,
    pub member: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyFailure {
    pub index: usize,
    pub q0: SpherePoint,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    /// Every critical-order point whose root search succeeded, member or not.
    pub entries: Vec<KMinusEntry>,
    /// Points excluded because the root search failed.
    pub failures: Vec<ClassifyFailure>,
}

impl Classification {
    pub fn members(&self) -> Vec<KMinusEntry> {
        self.entries.iter().filter(|e| e.member).cloned().collect()
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton search for a zero of `η ↦ ∫∇Q(y+η)(1+|y|²)^{−n}` from `η = 0`.
fn find_root(model: &LocalModel, opts: &ClassifyOptions) -> Result<(Vec<f64>, f64, usize)> {
    let n = model.n();
    let quad = &opts.quadrature;
    let mut eta = vec![0.0; n];
    let mut g = gradient_estimate(&model.q, &eta, quad)?;
    for it in 0..=opts.max_iters {
        // below the quadrature error estimate further steps only chase noise
        let target = opts.tol.max(g.error);
        if sup(&g.value) <= target {
            return Ok((eta, sup(&g.value), it));
        }
        if it == opts.max_iters {
            break;
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut p = eta.clone();
            let mut m = eta.clone();
            p[j] += opts.fd_step;
            m[j] -= opts.fd_step;
            let gp = gradient_estimate(&model.q, &p, quad)?.value;
            let gm = gradient_estimate(&model.q, &m, quad)?.value;
            for i in 0..n {
                jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * opts.fd_step);
            }
        }
        let rhs = -DVector::from_column_slice(&g.value);
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("Jacobian of the gradient integral is singular".into()))?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let mut cand: Vec<f64> = eta.iter().zip(step.iter()).map(|(e, s)| e + lambda * s).collect();
            let r = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r > opts.trust_radius {
                // pull back to the trust-region boundary along the ray
                cand.iter_mut().for_each(|x| *x *= opts.trust_radius / r);
            }
            let gc = gradient_estimate(&model.q, &cand, quad)?;
            if sup(&gc.value) < sup(&g.value) {
                accepted = Some((cand, gc));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((c, gc)) => {
                eta = c;
                g = gc;
            }
            None => {
                return Err(Error::TrustRegion(format!(
                    "no decrease of the gradient integral within |eta| <= {} (residual {:e})",
                    opts.trust_radius,
                    sup(&g.value)
                )))
            }
        }
    }
    Err(Error::NoConvergence {
        what: "root search for the gradient integral".into(),
        iterations: opts.max_iters,
        residual: sup(&g.value),
    })
}

/// Critical points of order `n−2σ` whose shifted radial moment is negative.
///
/// For each such model, `η₀` is a Newton root of the gradient integral and the point is a
/// member when the radial integral at `η₀` is negative (`η₀ = 0` recovers the unshifted set).
/// Failed root searches are listed, never guessed.
pub fn classify_kminus(spec: &CurvatureSpec, params: &ProblemParams, opts: &ClassifyOptions) -> Result<Classification> {
    if spec.n != params.n {
        return Err(Error::InvalidArgument(format!("spec on S^{} with parameters for n = {}", spec.n, params.n)));
    }
    let critical = 2.0 * params.half_gap();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (index, model) in spec.critical_points.iter().enumerate() {
        if (model.beta() - critical).abs() > opts.order_tol {
            continue;
        }
        match find_root(model, opts) {
            Ok((eta, residual, iterations)) => {
                let r = radial_estimate(&model.q, &eta, &opts.quadrature)?;
                entries.push(KMinusEntry {
                    index,
                    q0: model.q0.clone(),
                    member: r.value < 0.0,
                    eta,
                    radial_value: r.value,
                    radial_error: r.error,
                    gradient_residual: residual,
                    newton_iterations: iterations,
                });
            }
            Err(e) => failures.push(ClassifyFailure { index, q0: model.q0.clone(), reason: e.to_string() }),
        }
    }
    Ok(Classification { entries, failures })
}

/// Sampled margins of the two joint non-vanishing hypotheses of a model.
///
/// Each margin is the minimum over the shift grid of the larger of the two norms:
/// `|∫∇Q(y+ξ)w|` with `|∫Q(y+ξ)((1−|y|²)/(1+|y|²))w|`, and with `|∫Q(y+ξ)w|`.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisMargins {
    pub index: usize,
    pub structure: ModelStructure,
    pub conformal_margin: f64,
    pub conformal_argmin: Vec<f64>,
    pub value_margin: f64,
    pub value_argmin: Vec<f64>,
    pub flagged: bool,
}

/// Uniform grid of shifts in `[−2, 2]^n` (9 per axis on `R²`, 5 on `R³`).
pub fn default_shift_grid(n: usize) -> Vec<Vec<f64>> {
    let k = if n == 2 { 9 } else { 5 };
    let axis: Vec<f64> = (0..k).map(|i| -2.0 + 4.0 * i as f64 / (k - 1) as f64).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| axis.iter().map(move |&a| {
                let mut q = p.clone();
                q.push(a);
                q
            }))
            .collect();
    }
    out
}

pub fn hypothesis_margins(
    spec: &CurvatureSpec,
    shifts: &[Vec<f64>],
    quad: &FlatnessQuadrature,
) -> Result<Vec<HypothesisMargins>> {
    let mut out = Vec::new();
    for (index, model) in spec.critical_points.iter().enumerate() {
        if model.beta() >= model.n() as f64 {
            continue;
        }
        let mut best_c = (f64::INFINITY, Vec::new());
        let mut best_v = (f64::INFINITY, Vec::new());
        for xi in shifts {
            let (g, v, c) = hypothesis_estimates(&model.q, xi, quad)?;
            let (g, v, c) = (sup(&g.value), v.value.abs(), c.value.abs());
            if g.max(c) < best_c.0 {
                best_c = (g.max(c), xi.clone());
            }
            if g.max(v) < best_v.0 {
                best_v = (g.max(v), xi.clone());
            }
        }
        out.push(HypothesisMargins {
            index,
            structure: model.structure(),
            flagged: best_c.0 < HYPOTHESIS_FLAG || best_v.0 < HYPOTHESIS_FLAG,
            conformal_margin: best_c.0,
            conformal_argmin: best_c.1,
            value_margin: best_v.0,
            value_argmin: best_v.1,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use crate::sphere_core::Constant;

    fn spec_with(models: Vec<(SpherePoint, Vec<f64>, f64)>) -> CurvatureSpec {
        let ms = models.into_iter().map(|(p, a, b)| LocalModel::canonical(p, a, b).unwrap()).collect();
        CurvatureSpec::new(2, "test", Arc::new(Constant(1.0)), ms).unwrap()
    }

    #[test]
    fn membership_follows_coefficient_sum() {
        let params = ProblemParams::new(2, 0.5).unwrap();
        let spec = spec_with(vec![
            (SpherePoint::north(2), vec![1.0, -2.0], 1.0),
            (SpherePoint::south(2), vec![1.0, 2.0], 1.0),
            (SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap(), vec![-1.0, -1.0], 2.0),
        ]);
        let c = classify_kminus(&spec, &params, &ClassifyOptions::default()).unwrap();
        assert_eq!(c.entries.len(), 2);
        assert!(c.failures.is_empty());
        assert!(c.entries[0].member && !c.entries[1].member);
        assert!(c.entries[0].eta.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn no_critical_order_points_gives_empty_list() {
        let params = ProblemParams::new(2, 0.5).unwrap();
        let spec = spec_with(vec![(SpherePoint::north(2), vec![-1.0, -1.0], 1.5)]);
        let c = classify_kminus(&spec, &params, &ClassifyOptions::default()).unwrap();
        assert!(c.entries.is_empty() && c.failures.is_empty());
    }

    #[test]
    fn asymmetric_custom_model_finds_shifted_root() {
        // Q(y) = |y₁|(1 + 0.3 sign y₁) − |y₂|: the gradient integral vanishes away from 0
        let q = super::super::model::HomogeneousQ::custom(
            2,
            1.0,
            |y: &[f64]| y[0].abs() + 0.3 * y[0] - 1.0 * y[1].abs(),
            |y: &[f64]| vec![y[0].signum() + 0.3, -y[1].signum()],
        );
        let model = LocalModel::new(SpherePoint::north(2), q, f64::INFINITY).unwrap();
        let opts = ClassifyOptions::default();
        let (eta, res, _) = find_root(&model, &opts).unwrap();
        assert!(res <= 1e-8 && eta[0] < 0.0 && eta[1].abs() < 1e-9, "{eta:?} {res}");
    }

    #[test]
    fn hypothesis_margins_are_positive_for_canonical_models() {
        let spec = spec_with(vec![(SpherePoint::north(2), vec![1.0, -2.0], 1.0)]);
        let grid = default_shift_grid(2);
        assert_eq!(grid.len(), 81);
        let m = hypothesis_margins(&spec, &grid, &FlatnessQuadrature::default()).unwrap();
        assert!(!m[0].flagged && m[0].value_margin > 1e-3, "{:?}", m[0]);
    }
}
