use std::sync::Arc;

use crate::error::Result;
use crate::spectral_ops::{OperatorSpectrum, SpectralField, SphericalTransform};
use crate::sphere_core::{GridKind, ProblemParams, QuadratureGrid};

/// Transform, spectrum and averaging bound to one grid.
#[derive(Debug)]
pub struct SpectralWorkspace {
    pub params: ProblemParams,
    pub transform: SphericalTransform,
    pub spectrum: OperatorSpectrum,
    area: f64,
}

impl SpectralWorkspace {
    pub fn new(grid: &Arc<QuadratureGrid>, params: &ProblemParams) -> Result<Self> {
        Self::with_degree(grid, params, grid.max_transform_degree())
    }

    pub fn with_degree(grid: &Arc<QuadratureGrid>, params: &ProblemParams, max_degree: usize) -> Result<Self> {
        let transform = SphericalTransform::new(grid, max_degree)?;
        Ok(Self {
            params: *params,
            spectrum: OperatorSpectrum::new(params, max_degree),
            transform,
            area: grid.total_weight(),
        })
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        self.transform.grid()
    }

    pub fn max_degree(&self) -> usize {
        self.transform.max_degree()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        self.grid().integrate(f) / self.area
    }

    pub fn mean_of(&self, f: impl Fn(usize) -> f64) -> f64 {
        let w = self.grid().weights();
        (0..w.len()).map(|i| w[i] * f(i)).sum::<f64>() / self.area
    }

    pub fn analyze(&self, f: &[f64]) -> SpectralField {
        self.transform.analyze_values(f)
    }

    pub fn synthesize(&self, c: &SpectralField) -> Vec<f64> {
        self.transform.synthesize_values(c)
    }

    /// `⨍ v P_σ v` through Parseval on the degree-`L` projection of `v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let c = self.analyze(v);
        let s: f64 = c
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, x)| self.spectrum.get(c.basis().degree_of(i)) * x * x)
            .sum();
        s / self.area
    }

    /// `P_σ v` on the grid (band-limited to degree `L`).
    pub fn apply_p(&self, v: &[f64]) -> Vec<f64> {
        let c = self.analyze(v).scale_degrees(|k| self.spectrum.get(k));
        self.synthesize(&c)
    }

    /// Laplace–Beltrami operator, `ΔY_ℓ = −ℓ(ℓ+n−1) Y_ℓ`.
    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let n = self.params.nf();
        let c = self.analyze(v).scale_degrees(|k| -(k as f64) * (k as f64 + n - 1.0));
        self.synthesize(&c)
    }

    /// Coordinate axes whose moments can be integrated on this grid.
    pub fn moment_axes(&self) -> Vec<usize> {
        let n = self.params.n;
        match self.grid().kind() {
            GridKind::Product => (0..=n).collect(),
            _ => vec![n],
        }
    }
}
