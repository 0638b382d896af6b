use serde::Serialize;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Dimension, fractional order and the constants derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProblemParams {
    pub n: usize,
    pub sigma: f64,
    /// `c(n,σ) = Γ(n/2+σ)/Γ(n/2−σ)`, equal to the degree-0 eigenvalue of `P_σ`.
    pub c_intertwine: f64,
    /// `c_{n,σ} = Γ((n−2σ)/2) / (2^{2σ} π^{n/2} Γ(σ))`, the Riesz potential constant.
    pub c_riesz: f64,
    /// Surface area of `S^n`.
    pub omega_n: f64,
}

impl ProblemParams {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        let nf = n as f64;
        if !(sigma.is_finite() && sigma > 0.0 && sigma < nf / 2.0) {
            return Err(Error::InvalidOrder { n, sigma });
        }
        let c_intertwine = gamma_ratio(nf / 2.0 + sigma, nf / 2.0 - sigma);
        let c_riesz = gamma((nf - 2.0 * sigma) / 2.0)
            / (2f64.powf(2.0 * sigma) * PI.powf(nf / 2.0) * gamma(sigma));
        Ok(Self {
            n,
            sigma,
            c_intertwine,
            c_riesz,
            omega_n: sphere_area(n),
        })
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Critical exponent `(n+2σ)/(n−2σ)`.
    pub fn critical_exponent(&self) -> f64 {
        (self.nf() + 2.0 * self.sigma) / (self.nf() - 2.0 * self.sigma)
    }

    /// Sobolev exponent `2n/(n−2σ)`.
    pub fn sobolev_exponent(&self) -> f64 {
        2.0 * self.nf() / (self.nf() - 2.0 * self.sigma)
    }

    /// Exponent `2σ−n` of the chordal Riesz kernel.
    pub fn kernel_exponent(&self) -> f64 {
        2.0 * self.sigma - self.nf()
    }

    /// `(n−2σ)/2`, the weight of conformal factors.
    pub fn half_gap(&self) -> f64 {
        (self.nf() - 2.0 * self.sigma) / 2.0
    }

    /// `c_{n,σ}·c(n,σ)`, the constant in front of the integral equation on `R^n`.
    pub fn integral_constant(&self) -> f64 {
        self.c_riesz * self.c_intertwine
    }
}

/// `Γ(x)/Γ(y)` for positive arguments, with both shifted into `[1, 2)` by `Γ(x+1) = xΓ(x)`.
/// Equal shifted arguments (integer `x − y`) give a rational result with no Gamma evaluation.
pub(crate) fn gamma_ratio(mut x: f64, mut y: f64) -> f64 {
    let mut r = 1.0;
    while x >= 2.0 {
        x -= 1.0;
        r *= x;
    }
    while x < 1.0 {
        r /= x;
        x += 1.0;
    }
    while y >= 2.0 {
        y -= 1.0;
        r /= y;
    }
    while y < 1.0 {
        r *= y;
        y += 1.0;
    }
    if x == y {
        r
    } else {
        r * gamma(x) / gamma(y)
    }
}

/// `|S^n| = 2π^{(n+1)/2}/Γ((n+1)/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}
