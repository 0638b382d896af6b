//! Weighted integrals of a homogeneous model over `R^n`.
//!
//! With `z = y + ξ = rω` every integrand factors into `Q(ω)` or `∇Q(ω)` times a radial
//! profile `∫₀^∞ r^γ (1 + |rω − ξ|²)^{−m} dr`. The substitution `r = tan s` turns the
//! profile into `∫₀^{π/2} sin^γ s cos^κ s E(s)^{−m} ds` with `E` analytic and positive. A
//! composite Gauss rule whose end panels are Gauss–Jacobi with exponents `γ` and `κ`
//! integrates it spectrally over the whole half-line, so no cutoff or tail term is needed.
//! The angular integral is split at the coordinate hyperplanes (where `|z_j|^β` has its
//! kinks) and each piece uses a double-exponential rule, which absorbs the `|ω_j|^{β−1}`
//! edge behavior. Error estimates compare against the rule with half the radial nodes and
//! against the angular rule with doubled step.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::model::{HomogeneousQ, LocalModel};
use crate::error::{Error, Result};
use crate::sphere_core::quadrature::{gauss_jacobi, gauss_legendre};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlatnessQuadrature {
    /// Gauss nodes per radial panel.
    pub radial_nodes: usize,
    /// Half-width (in steps) of the double-exponential rule per quarter circle (`n = 2`).
    pub angular_level: usize,
    /// Half-width per direction of the product double-exponential rule per octant (`n = 3`).
    pub sphere_level: usize,
    /// Accepted error estimate for the public integrals.
    pub tol: f64,
}

impl Default for FlatnessQuadrature {
    fn default() -> Self {
        Self { radial_nodes: 24, angular_level: 192, sphere_level: 48, tol: 1e-6 }
    }
}

/// Value together with an absolute error estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// Equal panels of the radial variable `s = atan r`.
const RADIAL_PANELS: usize = 8;

/// Truncation of the double-exponential parameter; endpoint gaps reach `~1e−100`.
const DE_TMAX: f64 = 5.0;

/// One node of a double-exponential rule on `(0, π/2)`: `(cos α, sin α, weight, coarse weight)`.
fn de_rule(level: usize) -> Vec<(f64, f64, f64, f64)> {
    let level = level.max(2);
    let h = DE_TMAX / level as f64;
    let mut out = Vec::with_capacity(2 * level + 1);
    for k in -(level as i64)..=(level as i64) {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        // 1 − tanh(u) and 1 + tanh(u) without cancellation
        let (one_minus, one_plus) = (2.0 / (1.0 + (2.0 * u).exp()), 2.0 / (1.0 + (-2.0 * u).exp()));
        let w = FRAC_PI_4 * h * FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        if !(w > 0.0) {
            continue;
        }
        let (c, s) = if k >= 0 {
            let d = FRAC_PI_4 * one_minus;
            (d.sin(), d.cos())
        } else {
            let a = FRAC_PI_4 * one_plus;
            (a.cos(), a.sin())
        };
        let coarse = if k % 2 == 0 { 2.0 * w } else { 0.0 };
        out.push((c, s, w, coarse));
    }
    out
}

/// A unit direction with its fine and coarse angular weights.
struct Direction {
    w: Vec<f64>,
    fine: f64,
    coarse: f64,
}

fn directions(n: usize, quad: &FlatnessQuadrature) -> Result<Vec<Direction>> {
    let mut out = Vec::new();
    match n {
        2 => {
            let rule = de_rule(quad.angular_level);
            for q in 0..4 {
                for &(c, s, w, cw) in &rule {
                    let v = match q {
                        0 => vec![c, s],
                        1 => vec![-s, c],
                        2 => vec![-c, -s],
                        _ => vec![s, -c],
                    };
                    out.push(Direction { w: v, fine: w, coarse: cw });
                }
            }
        }
        3 => {
            let rule = de_rule(quad.sphere_level);
            for oct in 0..8 {
                let sg = |b: usize| if oct >> b & 1 == 1 { -1.0 } else { 1.0 };
                for &(ct, st, wt, cwt) in &rule {
                    for &(cp, sp, wp, cwp) in &rule {
                        out.push(Direction {
                            w: vec![sg(0) * st * cp, sg(1) * st * sp, sg(2) * ct],
                            fine: wt * wp * st,
                            coarse: cwt * cwp * st,
                        });
                    }
                }
            }
        }
        _ => return Err(Error::UnsupportedDimension(n)),
    }
    Ok(out)
}

/// Radial profile `∫₀^∞ r^γ (1 + r² − 2rc + |ξ|²)^{−m} dr` as a precomputed weighted sum.
struct Profile {
    m: i32,
    amp: Vec<f64>,
    sin2: Vec<f64>,
    cos_sq: Vec<f64>,
}

impl Profile {
    /// Composite rule on `RADIAL_PANELS` equal panels in `s`; the end panels carry the
    /// Jacobi weights `s^γ` and `(π/2−s)^κ`.
    fn new(gamma: f64, m: i32, nodes: usize) -> Self {
        let kappa = 2.0 * m as f64 - 2.0 - gamma;
        let width = FRAC_PI_2 / RADIAL_PANELS as f64;
        let first = gauss_jacobi(nodes, 0.0, gamma);
        let last = gauss_jacobi(nodes, kappa, 0.0);
        let inner = gauss_legendre(nodes);
        let mut amp = Vec::new();
        let mut sin2 = Vec::new();
        let mut cos_sq = Vec::new();
        let half = 0.5 * width;
        for p in 0..RADIAL_PANELS {
            let a = p as f64 * width;
            let rule = if p == 0 { &first } else if p + 1 == RADIAL_PANELS { &last } else { &inner };
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let s = a + half * (1.0 + x);
                let (sn, cs) = s.sin_cos();
                // the end-panel quotients stay bounded at s = 0 and s = π/2
                let sp = if p == 0 { (sn / (1.0 + x)).powf(gamma) } else { sn.powf(gamma) };
                let cp = if p + 1 == RADIAL_PANELS { (cs / (1.0 - x)).powf(kappa) } else { cs.powf(kappa) };
                amp.push(half * w * sp * cp);
                sin2.push((2.0 * s).sin());
                cos_sq.push(cs * cs);
            }
        }
        Self { m, amp, sin2, cos_sq }
    }

    fn eval(&self, c: f64, xi2: f64) -> f64 {
        self.amp
            .iter()
            .zip(self.sin2.iter().zip(&self.cos_sq))
            .map(|(a, (s2, c2))| a * (1.0 - c * s2 + xi2 * c2).powi(-self.m))
            .sum()
    }
}

/// `∫∇Q(z) w`, `∫Q(z) w` and `∫Q(z) w (1+|y|²)^{−1}` with `w = (1+|y|²)^{−n}`, `y = z − ξ`.
#[derive(Clone, Debug, PartialEq)]
struct Moments {
    gradient: Vec<f64>,
    value: f64,
    damped: f64,
}

struct Rules {
    grad: Profile,
    value: Profile,
    damped: Profile,
}

impl Rules {
    fn new(n: usize, beta: f64, nodes: usize) -> Self {
        let nf = n as f64;
        Self {
            grad: Profile::new(beta + nf - 2.0, n as i32, nodes),
            value: Profile::new(beta + nf - 1.0, n as i32, nodes),
            damped: Profile::new(beta + nf - 1.0, n as i32 + 1, nodes),
        }
    }
}

fn check_model(q: &HomogeneousQ, xi: &[f64]) -> Result<()> {
    let n = q.dim();
    if xi.len() != n {
        return Err(Error::InvalidArgument(format!("shift has length {} for a model on R^{n}", xi.len())));
    }
    if !(q.beta() < n as f64) {
        return Err(Error::InvalidArgument(format!("flatness order {} must be below n = {n}", q.beta())));
    }
    Ok(())
}

/// Fine value and error estimate of all moments.
fn moments(q: &HomogeneousQ, xi: &[f64], quad: &FlatnessQuadrature) -> Result<(Moments, [f64; 3])> {
    check_model(q, xi)?;
    let n = q.dim();
    let beta = q.beta();
    let fine = Rules::new(n, beta, quad.radial_nodes.max(4));
    let half = Rules::new(n, beta, (quad.radial_nodes / 2).max(2));
    let xi2: f64 = xi.iter().map(|x| x * x).sum();
    let zero = || Moments { gradient: vec![0.0; n], value: 0.0, damped: 0.0 };
    let (mut mf, mut mr, mut ma) = (zero(), zero(), zero());
    for d in directions(n, quad)? {
        let c: f64 = d.w.iter().zip(xi).map(|(a, b)| a * b).sum();
        let qv = q.value(&d.w);
        let gv = q.gradient(&d.w);
        let (rg, rv, rd) = (fine.grad.eval(c, xi2), fine.value.eval(c, xi2), fine.damped.eval(c, xi2));
        let (hg, hv, hd) = (half.grad.eval(c, xi2), half.value.eval(c, xi2), half.damped.eval(c, xi2));
        for j in 0..n {
            mf.gradient[j] += d.fine * gv[j] * rg;
            mr.gradient[j] += d.fine * gv[j] * hg;
            ma.gradient[j] += d.coarse * gv[j] * rg;
        }
        mf.value += d.fine * qv * rv;
        mr.value += d.fine * qv * hv;
        ma.value += d.coarse * qv * rv;
        mf.damped += d.fine * qv * rd;
        mr.damped += d.fine * qv * hd;
        ma.damped += d.coarse * qv * rd;
    }
    let diff = |a: &Moments, b: &Moments| {
        let g = a.gradient.iter().zip(&b.gradient).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        [g, (a.value - b.value).abs(), (a.damped - b.damped).abs()]
    };
    let (er, ea) = (diff(&mf, &mr), diff(&mf, &ma));
    let err = [er[0].max(ea[0]), er[1].max(ea[1]), er[2].max(ea[2])];
    Ok((mf, err))
}

fn accept<T>(e: Estimate<T>, quad: &FlatnessQuadrature, what: &str) -> Result<Estimate<T>> {
    if e.error.is_finite() && e.error <= quad.tol {
        Ok(e)
    } else {
        Err(Error::NoConvergence {
            what: format!(
                "{what} (radial nodes {}, angular levels {}/{})",
                quad.radial_nodes, quad.angular_level, quad.sphere_level
            ),
            iterations: quad.radial_nodes,
            residual: e.error,
        })
    }
}

/// Unchecked `∫∇Q(y+ξ)(1+|y|²)^{−n} dy`.
pub(crate) fn gradient_estimate(q: &HomogeneousQ, xi: &[f64], quad: &FlatnessQuadrature) -> Result<Estimate<Vec<f64>>> {
    let (m, e) = moments(q, xi, quad)?;
    Ok(Estimate { value: m.gradient, error: e[0] })
}

/// Unchecked `∫y·∇Q(y+ξ)(1+|y|²)^{−n} dy = β∫Q(z)w − ξ·∫∇Q(z)w`.
pub(crate) fn radial_estimate(q: &HomogeneousQ, xi: &[f64], quad: &FlatnessQuadrature) -> Result<Estimate<f64>> {
    let (m, e) = moments(q, xi, quad)?;
    let beta = q.beta();
    let xn = xi.iter().map(|x| x.abs()).sum::<f64>();
    let value = beta * m.value - xi.iter().zip(&m.gradient).map(|(a, b)| a * b).sum::<f64>();
    Ok(Estimate { value, error: beta * e[1] + xn * e[0] })
}

/// Unchecked gradient, value and conformal integrals from one pass.
pub(crate) fn hypothesis_estimates(
    q: &HomogeneousQ,
    xi: &[f64],
    quad: &FlatnessQuadrature,
) -> Result<(Estimate<Vec<f64>>, Estimate<f64>, Estimate<f64>)> {
    let (m, e) = moments(q, xi, quad)?;
    Ok((
        Estimate { value: m.gradient, error: e[0] },
        Estimate { value: m.value, error: e[1] },
        Estimate { value: 2.0 * m.damped - m.value, error: 2.0 * e[2] + e[1] },
    ))
}

/// `∫_{R^n} ∇Q(y+ξ)(1+|y|²)^{−n} dy` with an absolute error estimate.
pub fn q_gradient_integral(model: &LocalModel, xi: &[f64], quad: &FlatnessQuadrature) -> Result<Estimate<Vec<f64>>> {
    accept(gradient_estimate(&model.q, xi, quad)?, quad, "gradient integral quadrature")
}

/// `∫_{R^n} y·∇Q(y+ξ)(1+|y|²)^{−n} dy` with an absolute error estimate.
pub fn q_radial_integral(model: &LocalModel, xi: &[f64], quad: &FlatnessQuadrature) -> Result<Estimate<f64>> {
    accept(radial_estimate(&model.q, xi, quad)?, quad, "radial integral quadrature")
}

/// `∫_{R^n} Q(y+ξ)(1+|y|²)^{−n} dy`, whose `ξ`-gradient is [`q_gradient_integral`].
pub fn q_value_integral(model: &LocalModel, xi: &[f64], quad: &FlatnessQuadrature) -> Result<Estimate<f64>> {
    let (m, e) = moments(&model.q, xi, quad)?;
    accept(Estimate { value: m.value, error: e[1] }, quad, "value integral quadrature")
}

/// `∫_{R^n} Q(y+ξ) ((1−|y|²)/(1+|y|²)) (1+|y|²)^{−n} dy`.
pub fn q_conformal_integral(model: &LocalModel, xi: &[f64], quad: &FlatnessQuadrature) -> Result<Estimate<f64>> {
    let (m, e) = moments(&model.q, xi, quad)?;
    accept(Estimate { value: 2.0 * m.damped - m.value, error: 2.0 * e[2] + e[1] }, quad, "conformal integral quadrature")
}

/// `∫_{R^n} |y₁|^β (1+|y|²)^{−n} dy` in closed form (Beta functions), for checks.
pub fn canonical_moment(n: usize, beta: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let nf = n as f64;
    // angular: ∫_{S^{n−1}} |ω₁|^β = 2π^{(n−1)/2} Γ((β+1)/2) / Γ((β+n)/2)
    let ang = 2.0 * PI.powf((nf - 1.0) / 2.0) * gamma((beta + 1.0) / 2.0) / gamma((beta + nf) / 2.0);
    // radial: ∫₀^∞ r^{β+n−1}(1+r²)^{−n} dr = Γ((β+n)/2) Γ((n−β)/2) / (2 Γ(n))
    let rad = gamma((beta + nf) / 2.0) * gamma((nf - beta) / 2.0) / (2.0 * gamma(nf));
    ang * rad
}
