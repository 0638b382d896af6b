use serde::Serialize;
use std::sync::Arc;

use super::function::SphereFunction;
use super::grid::{GridField, QuadratureGrid};
use super::params::ProblemParams;
use super::point::{dot, norm, SpherePoint};
use crate::error::{Error, Result};

/// The conformal map `φ_{P,t}` acting as `y ↦ ty` in the stereographic chart with pole `P`.
///
/// The chart origin is `−P`, so for `t > 1` mass concentrates at `−P` under `T_φ`.
/// Parameters with `t < 1` are stored as the equivalent `(−P, 1/t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoebiusParams {
    pole: SpherePoint,
    dilation: f64,
}

impl MoebiusParams {
    pub fn new(pole: SpherePoint, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidArgument(format!("dilation must be positive and finite, got {t}")));
        }
        if t < 1.0 {
            Ok(Self { pole: pole.antipode(), dilation: 1.0 / t })
        } else {
            Ok(Self { pole, dilation: t })
        }
    }

    pub fn identity(n: usize) -> Self {
        Self { pole: SpherePoint::north(n), dilation: 1.0 }
    }

    /// Inverse of `ball_point`: `p = ((t−1)/t)P` with `|p| < 1`.
    pub fn from_ball_point(p: &[f64]) -> Result<Self> {
        let r = norm(p);
        if !(r < 1.0) {
            return Err(Error::InvalidArgument(format!("ball point must lie in the open unit ball (|p| = {r})")));
        }
        if r == 0.0 {
            return Ok(Self::identity(p.len() - 1));
        }
        let pole = SpherePoint::normalized(p.to_vec())?;
        Ok(Self { pole, dilation: 1.0 / (1.0 - r) })
    }

    pub fn pole(&self) -> &SpherePoint {
        &self.pole
    }

    pub fn dilation(&self) -> f64 {
        self.dilation
    }

    /// The point where `T_φ 1` concentrates.
    pub fn concentration_point(&self) -> SpherePoint {
        self.pole.antipode()
    }

    pub fn ball_point(&self) -> Vec<f64> {
        let s = (self.dilation - 1.0) / self.dilation;
        self.pole.coords().iter().map(|c| s * c).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.dilation == 1.0
    }

    pub fn inverse(&self) -> Self {
        Self { pole: self.pole.antipode(), dilation: self.dilation }
    }

    pub fn apply_into(&self, q: &[f64], out: &mut [f64]) {
        let p = self.pole.coords();
        let t = self.dilation;
        let s = dot(q, p);
        let den = (1.0 - s) + t * t * (1.0 + s);
        let cp = (t * t * (1.0 + s) - (1.0 - s)) / den;
        let cw = 2.0 * t / den;
        for ((o, qk), pk) in out.iter_mut().zip(q).zip(p) {
            *o = cw * (qk - s * pk) + cp * pk;
        }
    }

    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; q.len()];
        self.apply_into(q, &mut out);
        out
    }

    /// `|det dφ|(q) = (2t/((1−s)+t²(1+s)))^n` with `s = q·P`.
    pub fn jacobian_det(&self, q: &[f64]) -> f64 {
        let t = self.dilation;
        let s = dot(q, self.pole.coords());
        let n = (q.len() - 1) as i32;
        (2.0 * t / ((1.0 - s) + t * t * (1.0 + s))).powi(n)
    }

    /// `|det dφ|^{(n−2σ)/(2n)}`, the conformal weight of `T_φ`.
    pub fn conformal_weight(&self, q: &[f64], params: &ProblemParams) -> f64 {
        self.jacobian_det(q).powf(params.half_gap() / params.nf())
    }
}

pub fn moebius_apply(m: &MoebiusParams, q: &SpherePoint) -> SpherePoint {
    SpherePoint::normalized(m.apply(q.coords())).expect("Möbius image lies on the sphere")
}

/// `T_φ f = f∘φ · |det dφ|^{(n−2σ)/(2n)}` sampled on `grid`.
pub fn conformal_pushforward(
    f: &dyn SphereFunction,
    m: &MoebiusParams,
    grid: &Arc<QuadratureGrid>,
    params: &ProblemParams,
) -> GridField {
    let mut buf = vec![0.0; grid.n() + 1];
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            m.apply_into(x, &mut buf);
            f.value(&buf) * m.conformal_weight(x, params)
        })
        .collect();
    GridField::from_values_unchecked(grid.clone(), values)
}

/// The bubble `T_φ 1`.
pub fn bubble(grid: &Arc<QuadratureGrid>, m: &MoebiusParams, params: &ProblemParams) -> GridField {
    GridField::from_fn(grid, |x| m.conformal_weight(x, params))
}
