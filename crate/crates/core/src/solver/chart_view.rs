use crate::error::Result;
use crate::sphere_core::quadrature::gauss_legendre;
use crate::spectral_ops::{analyze, SpectralField};
use crate::sphere_core::{conformal_factor, GridField, ProblemParams, SpherePoint, StereoChart};

/// Spectral interpolant of a grid field viewed on `R^n` through the chart centered at a point.
///
/// `u(x) = H(x)·v(F(x))` is the flat counterpart of `v`.
#[derive(Clone, Debug)]
pub struct ChartView {
    chart: StereoChart,
    field: SpectralField,
    params: ProblemParams,
}

impl ChartView {
    pub fn new(v: &GridField, center: &SpherePoint, params: &ProblemParams) -> Result<Self> {
        Ok(Self { chart: StereoChart::centered_at(center), field: analyze(v)?, params: *params })
    }

    pub fn from_spectral(field: SpectralField, center: &SpherePoint, params: &ProblemParams) -> Self {
        Self { chart: StereoChart::centered_at(center), field, params: *params }
    }

    pub fn chart(&self) -> &StereoChart {
        &self.chart
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    /// `v(F(x))`.
    pub fn sphere_value(&self, x: &[f64]) -> f64 {
        self.field.evaluate(&self.chart.forward(x))
    }

    /// `u(x) = H(x)·v(F(x))`.
    pub fn flat_value(&self, x: &[f64]) -> f64 {
        conformal_factor(x, &self.params) * self.sphere_value(x)
    }

    /// Mean of `g(u(r·ω))` over unit directions `ω`.
    pub fn spherical_mean(&self, r: f64, g: impl Fn(f64) -> f64) -> f64 {
        let dirs = Directions::new(self.params.n);
        dirs.mean(|w| {
            let x: Vec<f64> = w.iter().map(|a| r * a).collect();
            g(self.flat_value(&x))
        })
    }
}

/// Averaging rule on the unit sphere `S^{n−1}` of `R^n`.
///
/// `n = 2`: equispaced angles. `n = 3`: Gauss–Legendre in `cos θ` times equispaced azimuths.
#[derive(Clone, Debug)]
pub struct Directions {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Directions {
    pub fn new(n: usize) -> Self {
        Self::with_resolution(n, 32)
    }

    pub fn with_resolution(n: usize, m: usize) -> Self {
        use std::f64::consts::PI;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        if n == 2 {
            for j in 0..m {
                let a = 2.0 * PI * j as f64 / m as f64;
                points.push(vec![a.cos(), a.sin()]);
                weights.push(1.0 / m as f64);
            }
        } else {
            let rule = gauss_legendre(m / 2);
            for (z, w) in rule.nodes.iter().zip(&rule.weights) {
                let s = (1.0 - z * z).sqrt();
                for j in 0..m {
                    let a = 2.0 * PI * j as f64 / m as f64;
                    points.push(vec![s * a.cos(), s * a.sin(), *z]);
                    weights.push(w / 2.0 / m as f64);
                }
            }
        }
        Self { points, weights }
    }

    pub fn mean(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}
