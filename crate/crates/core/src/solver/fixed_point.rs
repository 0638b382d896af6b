use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_ops::{is_zonal_data, RieszOperator};
use crate::sphere_core::{GridField, ProblemParams, QuadratureGrid};
use crate::variational::SpectralWorkspace;

/// How iterates are scaled between steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    MaxOne,
    Energy,
}

/// Which discretization of `P_σ^{-1}` drives the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InverseRoute {
    /// Coefficient division by `λ_k` on the grid transform.
    #[default]
    Spectral,
    /// The Riesz potential quadrature.
    Quadrature,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Subcritical defect; the exponent is `p = (n+2σ)/(n−2σ) − τ`.
    pub tau: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub normalization: Normalization,
    pub damping: f64,
    pub route: InverseRoute,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tau: 0.0,
            max_iters: 5000,
            tol: 1e-10,
            normalization: Normalization::MaxOne,
            damping: 1.0,
            route: InverseRoute::Spectral,
        }
    }
}

impl SolveOptions {
    pub fn exponent(&self, params: &ProblemParams) -> Result<f64> {
        let crit = params.critical_exponent();
        if !(self.tau >= 0.0 && self.tau < crit - 1.0) {
            return Err(Error::InvalidArgument(format!("tau = {} must lie in [0, {})", self.tau, crit - 1.0)));
        }
        Ok(crit - self.tau)
    }

    fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping {} is outside (0, 1]", self.damping)));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument("tol must be positive and max_iters nonzero".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub v: GridField,
    pub residual_sup: f64,
    pub iterations: usize,
    pub energy: f64,
    /// Euclidean norm of the raw Kazdan–Warner vector; `NaN` where the grid cannot evaluate it.
    pub kw_defect_norm: f64,
    /// Multiplier `μ` of the last normalized step; the reported field is `μ^{−1/(p−1)}` times it.
    pub multiplier_absorbed: f64,
    pub exponent: f64,
    pub converged: bool,
}

enum Inverse {
    Spectral,
    Quadrature(RieszOperator),
}

/// Fixed-point solver for `v = P_σ^{-1}(c K v^p)` bound to one grid.
pub struct Solver {
    ws: SpectralWorkspace,
    inverse: Inverse,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver").field("ws", &self.ws).finish()
    }
}

impl Solver {
    pub fn new(grid: &Arc<QuadratureGrid>, params: &ProblemParams, route: InverseRoute) -> Result<Self> {
        if grid.n() != params.n {
            return Err(Error::InvalidArgument(format!("grid is for n={} but params have n={}", grid.n(), params.n)));
        }
        let ws = SpectralWorkspace::new(grid, params)?;
        let inverse = match route {
            InverseRoute::Spectral => Inverse::Spectral,
            InverseRoute::Quadrature => Inverse::Quadrature(RieszOperator::new(grid, params)?),
        };
        Ok(Self { ws, inverse })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.ws.params
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        self.ws.grid()
    }

    pub fn workspace(&self) -> &SpectralWorkspace {
        &self.ws
    }

    /// `P_σ^{-1} f` on grid values.
    pub fn inverse(&self, f: &[f64]) -> Result<Vec<f64>> {
        if !is_zonal_data(self.grid(), f, 1e-12) {
            return Err(Error::UnsupportedGrid("S³ product grids only carry zonal data".into()));
        }
        match &self.inverse {
            Inverse::Spectral => Ok(self.ws.transform.inverse_psigma_values(f, &self.ws.spectrum)),
            Inverse::Quadrature(op) => op.apply(f),
        }
    }

    /// `G(v) = P_σ^{-1}(c K v^p)`.
    pub fn map(&self, v: &[f64], k: &[f64], p: f64) -> Result<Vec<f64>> {
        let c = self.params().c_intertwine;
        let f: Vec<f64> = v.iter().zip(k).map(|(a, b)| c * b * a.max(0.0).powf(p)).collect();
        self.inverse(&f)
    }

    /// `‖v − G(v)‖_∞`.
    pub fn residual(&self, v: &[f64], k: &[f64], p: f64) -> Result<f64> {
        let g = self.map(v, k, p)?;
        Ok(v.iter().zip(&g).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    fn scale_of(&self, g: &[f64], norm: Normalization) -> f64 {
        match norm {
            Normalization::MaxOne => g.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Normalization::Energy => {
                let q = self.params().sobolev_exponent();
                self.ws.mean_of(|i| g[i].abs().powf(q)).powf(1.0 / q)
            }
        }
    }

    pub fn solve(&self, k: &GridField, opts: &SolveOptions, init: &GridField) -> Result<SolveReport> {
        opts.validate()?;
        let p = opts.exponent(self.params())?;
        let grid = self.grid();
        if !k.grid().same_layout(grid) {
            return Err(Error::InvalidArgument("K lives on a different grid".into()));
        }
        if !init.grid().same_layout(grid) {
            return Err(Error::InvalidArgument("initial field lives on a different grid".into()));
        }
        if k.min() <= 0.0 {
            return Err(Error::InvalidArgument("K must be positive".into()));
        }
        if init.min() <= 0.0 {
            return Err(Error::InvalidArgument("initial field must be positive".into()));
        }
        let kv = k.values();
        let s0 = self.scale_of(init.values(), opts.normalization);
        let mut v: Vec<f64> = init.values().iter().map(|a| a / s0).collect();
        let d = opts.damping;
        let mut last = f64::INFINITY;
        for it in 1..=opts.max_iters {
            let g = self.map(&v, kv, p)?;
            if let Some(i) = g.iter().position(|a| !(*a > 0.0)) {
                return Err(Error::Negativity(format!("iterate {it} is {:e} at node {i}", g[i])));
            }
            let mu = self.scale_of(&g, opts.normalization);
            if !mu.is_finite() || mu <= 0.0 {
                return Err(Error::NoConvergence { what: "fixed-point iteration".into(), iterations: it, residual: f64::NAN });
            }
            let s = mu.powf(-1.0 / (p - 1.0));
            let gap = v.iter().zip(&g).fold(0.0f64, |m, (a, b)| m.max((a - b / mu).abs()));
            last = s * gap;
            if !last.is_finite() {
                break;
            }
            if last <= opts.tol {
                let u: Vec<f64> = v.iter().map(|a| s * a).collect();
                return self.report(u, kv, p, mu, it, opts.tol);
            }
            for (a, b) in v.iter_mut().zip(&g) {
                *a = (1.0 - d) * *a + d * b / mu;
            }
        }
        Err(Error::NoConvergence { what: "fixed-point iteration".into(), iterations: opts.max_iters, residual: last })
    }

    fn report(&self, u: Vec<f64>, k: &[f64], p: f64, mu: f64, iterations: usize, tol: f64) -> Result<SolveReport> {
        let residual_sup = self.residual(&u, k, p)?;
        let energy = self.ws.energy(&u, k)?;
        let kw_defect_norm = match self.ws.kazdan_warner(&u, k) {
            Ok(kw) => kw.iter().map(|a| a * a).sum::<f64>().sqrt(),
            Err(Error::UnsupportedGrid(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        Ok(SolveReport {
            v: GridField::new(self.grid().clone(), u)?,
            residual_sup,
            iterations,
            energy,
            kw_defect_norm,
            multiplier_absorbed: mu,
            exponent: p,
            converged: residual_sup <= tol,
        })
    }
}

/// One-shot solve; build a [`Solver`] to reuse operators across calls.
pub fn solve(k: &GridField, opts: &SolveOptions, init: &GridField, params: &ProblemParams) -> Result<SolveReport> {
    Solver::new(k.grid(), params, opts.route)?.solve(k, opts, init)
}
