use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use super::point::SpherePoint;
use super::quadrature::{gauss_chebyshev_u, gauss_legendre, Rule1d};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    /// Full tensor-product grid.
    Product,
    /// One representative node per latitude; integrates functions of `x_{n+1}` only.
    Zonal,
}

impl GridKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GridKind::Product => "product",
            GridKind::Zonal => "zonal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(GridKind::Product),
            "zonal" => Ok(GridKind::Zonal),
            other => Err(Error::Parse(format!("unknown grid kind '{other}'"))),
        }
    }
}

/// Nodes and positive weights on `S^n`, `n ∈ {2, 3}`.
///
/// Product layout for `n = 2`: Gauss–Legendre in `z = x₃` times `M = 2N` equispaced azimuths,
/// node index `j·M + l`. For `n = 3`: Chebyshev-U nodes in `u = x₄` times that `S²` grid,
/// index `(a·N + j)·M + l`. Each fixed `(a, j)` is a ring of `M` nodes.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    n: usize,
    kind: GridKind,
    resolution: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    polar: Rule1d,
    height: Option<Rule1d>,
}

/// Product grid of the given resolution.
pub fn build_grid(n: usize, resolution: usize) -> Result<QuadratureGrid> {
    QuadratureGrid::product(n, resolution)
}

impl QuadratureGrid {
    pub fn build(n: usize, resolution: usize, kind: GridKind) -> Result<Self> {
        match kind {
            GridKind::Product => Self::product(n, resolution),
            GridKind::Zonal => Self::zonal(n, resolution),
        }
    }

    fn check(n: usize, resolution: usize) -> Result<()> {
        if !(n == 2 || n == 3) {
            return Err(Error::UnsupportedDimension(n));
        }
        if resolution < 4 {
            return Err(Error::InvalidArgument(format!("grid resolution must be at least 4, got {resolution}")));
        }
        Ok(())
    }

    pub fn product(n: usize, resolution: usize) -> Result<Self> {
        Self::check(n, resolution)?;
        let nz = resolution;
        let m = 2 * resolution;
        let polar = gauss_legendre(nz);
        let dphi = 2.0 * PI / m as f64;
        let azimuths: Vec<(f64, f64)> = (0..m).map(|l| (l as f64 * dphi).sin_cos()).collect();
        let mut s2 = Vec::with_capacity(nz * m * 3);
        let mut s2w = Vec::with_capacity(nz * m);
        for (z, wz) in polar.nodes.iter().zip(&polar.weights) {
            let r = (1.0 - z * z).max(0.0).sqrt();
            for &(s, c) in &azimuths {
                s2.extend_from_slice(&[r * c, r * s, *z]);
                s2w.push(wz * dphi);
            }
        }
        if n == 2 {
            return Ok(Self { n, kind: GridKind::Product, resolution, coords: s2, weights: s2w, polar, height: None });
        }
        let height = gauss_chebyshev_u(resolution);
        let mut coords = Vec::with_capacity(height.len() * s2w.len() * 4);
        let mut weights = Vec::with_capacity(height.len() * s2w.len());
        for (u, wu) in height.nodes.iter().zip(&height.weights) {
            let r = (1.0 - u * u).max(0.0).sqrt();
            for (i, w) in s2w.iter().enumerate() {
                coords.extend_from_slice(&[r * s2[3 * i], r * s2[3 * i + 1], r * s2[3 * i + 2], *u]);
                weights.push(wu * w);
            }
        }
        Ok(Self { n, kind: GridKind::Product, resolution, coords, weights, polar, height: Some(height) })
    }

    /// Zonal grid: one node `(√(1−z²), 0, …, z)` per latitude, weighted by the fiber area.
    pub fn zonal(n: usize, resolution: usize) -> Result<Self> {
        Self::check(n, resolution)?;
        let (rule, fiber) = if n == 2 {
            (gauss_legendre(resolution), 2.0 * PI)
        } else {
            (gauss_chebyshev_u(resolution), 4.0 * PI)
        };
        let mut coords = Vec::with_capacity(rule.len() * (n + 1));
        for z in &rule.nodes {
            let mut x = vec![0.0; n + 1];
            x[0] = (1.0 - z * z).max(0.0).sqrt();
            x[n] = *z;
            coords.extend(x);
        }
        let weights = rule.weights.iter().map(|w| w * fiber).collect();
        let (polar, height) = if n == 2 { (rule, None) } else { (gauss_legendre(resolution), Some(rule)) };
        Ok(Self { n, kind: GridKind::Zonal, resolution, coords, weights, polar, height })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Same dimension, family and resolution, hence identical nodes.
    pub fn same_layout(&self, other: &QuadratureGrid) -> bool {
        self.n == other.n && self.kind == other.kind && self.resolution == other.resolution
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Highest degree integrated exactly (for zonal grids: among zonal polynomials).
    pub fn exactness_degree(&self) -> usize {
        2 * self.resolution - 1
    }

    /// Largest harmonic degree a transform on this grid supports.
    pub fn max_transform_degree(&self) -> usize {
        self.resolution - 1
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.n + 1;
        &self.coords[d * i..d * (i + 1)]
    }

    pub fn point(&self, i: usize) -> SpherePoint {
        SpherePoint::normalized(self.node(i).to_vec()).expect("grid nodes are unit vectors")
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.n + 1)
    }

    /// Gauss–Legendre rule in `cos θ` of the `S²` factor.
    pub fn polar_rule(&self) -> &Rule1d {
        &self.polar
    }

    /// Chebyshev-U rule in `x₄` (only for `n = 3`).
    pub fn height_rule(&self) -> Option<&Rule1d> {
        self.height.as_ref()
    }

    /// Azimuths per ring (1 for zonal grids).
    pub fn ring_size(&self) -> usize {
        match self.kind {
            GridKind::Product => 2 * self.resolution,
            GridKind::Zonal => 1,
        }
    }

    pub fn ring_count(&self) -> usize {
        self.len() / self.ring_size()
    }

    /// Coordinate along the zonal axis `x_{n+1}` of node `i`.
    pub fn axial(&self, i: usize) -> f64 {
        self.coords[(self.n + 1) * i + self.n]
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Values sampled at the nodes of a shared grid.
#[derive(Clone, Debug)]
pub struct GridField {
    grid: Arc<QuadratureGrid>,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite field value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: &Arc<QuadratureGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn constant(grid: &Arc<QuadratureGrid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn zip_map(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.len() == other.len());
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Average `⨍ f` over the sphere.
    pub fn mean(&self) -> f64 {
        self.integrate() / self.grid.total_weight()
    }

    /// `⨍ |f|^p`.
    pub fn abs_pow_mean(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().zip(self.grid.weights()).map(|(v, w)| w * v.abs().powf(p)).sum();
        s / self.grid.total_weight()
    }

    /// `(∫ f²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().zip(self.grid.weights()).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the maximum, lowest index on ties.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, self.values[0]);
        for (i, v) in self.values.iter().enumerate().skip(1) {
            if *v > best.1 {
                best = (i, *v);
            }
        }
        best
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.argmax().1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_s2_area_and_moments() {
        let g = build_grid(2, 16).unwrap();
        assert!((g.total_weight() - 4.0 * PI).abs() < 1e-12);
        let x3: Vec<f64> = g.nodes().map(|x| x[2]).collect();
        assert!(g.integrate(&x3).abs() < 1e-12);
        let x3sq: Vec<f64> = g.nodes().map(|x| x[2] * x[2]).collect();
        assert!((g.integrate(&x3sq) - 4.0 * PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn product_s3_area_and_moments() {
        let g = build_grid(3, 8).unwrap();
        let area = 2.0 * PI * PI;
        assert!((g.total_weight() - area).abs() < 1e-12);
        for k in 0..4 {
            let v: Vec<f64> = g.nodes().map(|x| x[k] * x[k]).collect();
            assert!((g.integrate(&v) - area / 4.0).abs() < 1e-12);
        }
        // ∫ x₁²x₄² = ω₃/(4·6)
        let v: Vec<f64> = g.nodes().map(|x| x[0] * x[0] * x[3] * x[3]).collect();
        assert!((g.integrate(&v) - area / 24.0).abs() < 1e-12);
    }

    #[test]
    fn zonal_grids_match_product() {
        for n in [2, 3] {
            let p = build_grid(n, 10).unwrap();
            let z = QuadratureGrid::zonal(n, 10).unwrap();
            let f = |x: &[f64]| (1.3 * x[n]).exp();
            let a: Vec<f64> = p.nodes().map(f).collect();
            let b: Vec<f64> = z.nodes().map(f).collect();
            assert!((p.integrate(&a) - z.integrate(&b)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_other_dimensions() {
        assert!(matches!(build_grid(4, 8), Err(Error::UnsupportedDimension(4))));
        assert!(build_grid(2, 3).is_err());
    }
}
