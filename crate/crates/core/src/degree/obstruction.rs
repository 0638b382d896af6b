use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::flatness::CurvatureSpec;
use crate::solver::Directions;
use crate::sphere_core::quadrature::{gauss_legendre, Rule1d};
use crate::sphere_core::{norm, pole_frame, SpherePoint};

/// A continuous vector field on a closed ball of `R^{n+1}` centered at the origin.
pub trait BallField: Sync {
    /// Ambient dimension `n+1`.
    fn dim(&self) -> usize;
    fn radius(&self) -> f64;
    fn eval(&self, p: &[f64]) -> Result<Vec<f64>>;
    /// Absolute quadrature error of `eval` at `p` (0 for closed-form fields).
    fn error_estimate(&self, _p: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
}

/// Quadrature of the obstruction integral in geodesic polar coordinates about `P`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstructionRule {
    /// Gauss–Legendre nodes per polar panel.
    pub panel_nodes: usize,
    /// Directions of the angular rule on `S^{n−1}` (halved per axis on `S²`).
    pub directions: usize,
    /// Panels halve toward `P` until `θ < floor/t`.
    pub floor: f64,
}

impl Default for ObstructionRule {
    fn default() -> Self {
        Self { panel_nodes: 16, directions: 48, floor: 1e-5 }
    }
}

impl ObstructionRule {
    fn coarse(&self) -> Self {
        Self { panel_nodes: (self.panel_nodes / 2).max(4), directions: (self.directions / 2).max(8), floor: self.floor }
    }
}

/// Polar nodes `θ ∈ (0, π)` with panels graded toward `θ = 0` on the scale `1/t`.
fn polar_rule(t: f64, rule: &ObstructionRule) -> Rule1d {
    let base = gauss_legendre(rule.panel_nodes);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut push = |a: f64, b: f64| {
        let m = base.mapped(a, b);
        nodes.extend(m.nodes);
        weights.extend(m.weights);
    };
    push(PI / 2.0, PI);
    let mut b = PI / 2.0;
    while b > rule.floor / t {
        push(b / 2.0, b);
        b /= 2.0;
    }
    Rule1d { nodes, weights }
}

/// `V(P, t) = ∫_{S^n} K(φ_{P,t}(x)) x dvol(x)`.
///
/// With `w = φ(x)` at geodesic distance `θ` from `P` in direction `u`, and `ρ = cot(θ/2)/t`,
/// `x = (2ρ/(1+ρ²)) u + ((ρ²−1)/(1+ρ²)) P` and `dvol(x) = W dvol(w)` with
/// `W = (t/(t² sin²(θ/2) + cos²(θ/2)))^n`. `K(P)` is subtracted (its integral against `x`
/// vanishes), which keeps the integrand bounded as the weight concentrates at `P`.
pub fn eval_obstruction(spec: &CurvatureSpec, pole: &SpherePoint, t: f64, rule: &ObstructionRule) -> Result<Vec<f64>> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("dilation must satisfy t >= 1, got {t}")));
    }
    if pole.dim() != spec.n {
        return Err(Error::InvalidArgument(format!("pole on S^{} for a spec on S^{}", pole.dim(), spec.n)));
    }
    let n = spec.n;
    let d = n + 1;
    let p = pole.coords();
    let frame = pole_frame(p);
    // on S² the same count gives a product rule of m/2 × m directions
    let m = if n == 2 { rule.directions } else { (rule.directions / 2).max(8) };
    let dirs = Directions::with_resolution(n, m);
    let units: Vec<Vec<f64>> = dirs
        .points
        .iter()
        .map(|w| (0..d).map(|k| w.iter().zip(&frame).map(|(c, e)| c * e[k]).sum()).collect())
        .collect();
    let area = 2.0 * PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0);
    let kp = spec.value(p);
    let mut out = vec![0.0; d];
    let mut wpt = vec![0.0; d];
    let polar = polar_rule(t, rule);
    for (th, wt) in polar.nodes.iter().zip(&polar.weights) {
        let (s, c) = th.sin_cos();
        let (sh, ch) = (0.5 * th).sin_cos();
        let weight = (t / (t * t * sh * sh + ch * ch)).powi(n as i32) * s.powi(n as i32 - 1) * wt * area;
        let rho = ch / sh / t;
        let (a, b) = (2.0 * rho / (1.0 + rho * rho), (rho * rho - 1.0) / (1.0 + rho * rho));
        for (u, du) in units.iter().zip(&dirs.weights) {
            for k in 0..d {
                wpt[k] = c * p[k] + s * u[k];
            }
            let f = (spec.value(&wpt) - kp) * weight * du;
            for k in 0..d {
                out[k] += f * (a * u[k] + b * p[k]);
            }
        }
    }
    Ok(out)
}

/// The obstruction field on the ball of radius `(t*−1)/t*`, via `p = ((t−1)/t)P`.
#[derive(Clone)]
pub struct ObstructionField {
    pub spec: CurvatureSpec,
    pub t_star: f64,
    pub rule: ObstructionRule,
}

impl ObstructionField {
    pub fn new(spec: CurvatureSpec, t_star: f64) -> Result<Self> {
        if !(t_star > 1.0 && t_star.is_finite()) {
            return Err(Error::InvalidArgument(format!("t* must exceed 1, got {t_star}")));
        }
        Ok(Self { spec, t_star, rule: ObstructionRule::default() })
    }

    pub fn with_rule(mut self, rule: ObstructionRule) -> Self {
        self.rule = rule;
        self
    }

    fn split(&self, p: &[f64]) -> Result<(SpherePoint, f64)> {
        let r = norm(p);
        if !(r < 1.0) {
            return Err(Error::InvalidArgument(format!("ball point outside the unit ball (|p| = {r})")));
        }
        if r < 1e-14 {
            // t = 1: the integral is ∫K x for every pole
            return Ok((SpherePoint::north(self.spec.n), 1.0));
        }
        Ok((SpherePoint::normalized(p.to_vec())?, 1.0 / (1.0 - r)))
    }
}

impl BallField for ObstructionField {
    fn dim(&self) -> usize {
        self.spec.n + 1
    }

    fn radius(&self) -> f64 {
        (self.t_star - 1.0) / self.t_star
    }

    fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (pole, t) = self.split(p)?;
        eval_obstruction(&self.spec, &pole, t, &self.rule)
    }

    fn error_estimate(&self, p: &[f64]) -> Result<f64> {
        let (pole, t) = self.split(p)?;
        let fine = eval_obstruction(&self.spec, &pole, t, &self.rule)?;
        let coarse = eval_obstruction(&self.spec, &pole, t, &self.rule.coarse())?;
        Ok(fine.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}
