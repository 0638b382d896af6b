use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::obstruction::{BallField, ObstructionField, ObstructionRule};
use crate::error::{Error, Result};
use crate::flatness::CurvatureSpec;
use crate::sphere_core::norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeMethod {
    SignedZeros,
    KroneckerIntegral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegreeOptions {
    /// Seed lattice points per axis of the cube `[−r, r]^{n+1}`.
    pub seeds_per_axis: usize,
    pub max_iters: usize,
    /// Newton stops when `|V| ≤ residual_tol · max_boundary|V|`.
    pub residual_tol: f64,
    /// Central-difference step of the Jacobian, relative to the ball radius.
    pub fd_step: f64,
    /// Newton endpoints closer than this are the same zero.
    pub merge_tol: f64,
    /// Zeros with `|det DV| ≤ det_tol · (scale/r)^{n+1}` are degenerate.
    pub det_tol: f64,
    /// Polar and azimuthal cells of the boundary grid (the azimuth uses twice as many).
    pub boundary_cells: usize,
    /// Run the Kronecker boundary integral when `n = 2`.
    pub kronecker: bool,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        Self {
            seeds_per_axis: 5,
            max_iters: 60,
            residual_tol: 1e-10,
            fd_step: 1e-5,
            merge_tol: 1e-6,
            det_tol: 1e-8,
            boundary_cells: 48,
            kronecker: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub p: Vec<f64>,
    pub sign: i32,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub zeros: Vec<ZeroRecord>,
    pub boundary_min_norm: f64,
    /// Largest quadrature error estimate sampled on the boundary.
    pub boundary_error: f64,
    pub degree: i64,
    pub method: DegreeMethod,
    /// Winding number from the boundary integral, when it ran.
    pub kronecker: Option<i64>,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Boundary samples of the sphere of radius `r` in `R^d` (`d ∈ {3, 4}`), as a
/// `(cells+1) × 2·cells` latitude–longitude grid for `d = 3`.
fn boundary_points(d: usize, r: f64, cells: usize) -> Result<Vec<Vec<f64>>> {
    let nt = cells;
    let np = 2 * cells;
    match d {
        3 => {
            let mut out = Vec::with_capacity((nt + 1) * np);
            for i in 0..=nt {
                let th = PI * i as f64 / nt as f64;
                for j in 0..np {
                    let ph = 2.0 * PI * j as f64 / np as f64;
                    out.push(vec![r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]);
                }
            }
            Ok(out)
        }
        4 => {
            // Hopf coordinates (η, ξ₁, ξ₂) on S³
            let k = (cells / 2).max(4);
            let mut out = Vec::new();
            for i in 0..=k {
                let eta = 0.5 * PI * i as f64 / k as f64;
                for a in 0..2 * k {
                    let x1 = 2.0 * PI * a as f64 / (2 * k) as f64;
                    for b in 0..2 * k {
                        let x2 = 2.0 * PI * b as f64 / (2 * k) as f64;
                        let (se, ce) = eta.sin_cos();
                        out.push(vec![r * ce * x1.cos(), r * ce * x1.sin(), r * se * x2.cos(), r * se * x2.sin()]);
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::UnsupportedDimension(d.saturating_sub(1))),
    }
}

/// `Σ Ω/4π` over the image triangles of the latitude–longitude boundary grid.
///
/// Signed solid angles use `tan(Ω/2) = a·(b×c)/(1 + a·b + b·c + c·a)` on unit vectors.
fn kronecker_sum(units: &[Vec<f64>], cells: usize) -> f64 {
    let np = 2 * cells;
    let at = |i: usize, j: usize| &units[i * np + j % np];
    let omega = |a: &[f64], b: &[f64], c: &[f64]| {
        let num = dot(a, &cross(b, c));
        let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
        2.0 * num.atan2(den)
    };
    let mut total = 0.0;
    for i in 0..cells {
        for j in 0..np {
            let (a, b, c, e) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            total += omega(a, b, c) + omega(a, c, e);
        }
    }
    total / (4.0 * PI)
}

fn jacobian(field: &dyn BallField, p: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let d = field.dim();
    let mut jac = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[j] += h;
        b[j] -= h;
        let (va, vb) = (field.eval(&a)?, field.eval(&b)?);
        for i in 0..d {
            jac[(i, j)] = (va[i] - vb[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Damped Newton from `p0` inside the ball; `None` when the iterate cannot stay inside.
fn newton(field: &dyn BallField, p0: Vec<f64>, target: f64, opts: &DegreeOptions) -> Result<Option<(Vec<f64>, f64)>> {
    let r = field.radius();
    let h = opts.fd_step * r;
    let mut p = p0;
    let mut v = field.eval(&p)?;
    for _ in 0..opts.max_iters {
        let res = norm(&v);
        if res <= target {
            return Ok(Some((p, res)));
        }
        // near the boundary the central stencil would leave the domain
        if norm(&p) + h >= r {
            return Ok(None);
        }
        let jac = jacobian(field, &p, h)?;
        let Some(step) = jac.lu().solve(&-DVector::from_column_slice(&v)) else {
            return Ok(None);
        };
        let mut lambda = 1.0;
        let mut next = None;
        for _ in 0..30 {
            let cand: Vec<f64> = p.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            if norm(&cand) < r {
                let vc = field.eval(&cand)?;
                if norm(&vc) < res {
                    next = Some((cand, vc));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match next {
            Some((c, vc)) => {
                p = c;
                v = vc;
            }
            None => return Ok(None),
        }
    }
    let res = norm(&v);
    Ok((res <= target).then_some((p, res)))
}

fn seeds(d: usize, r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    // cell centres, so no seed sits on a symmetry plane through the origin by construction
    let axis: Vec<f64> = (0..per_axis).map(|i| r * (-1.0 + (2 * i + 1) as f64 / per_axis as f64)).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out.into_iter().filter(|p| norm(p) < r).collect()
}

/// Brouwer degree of `field` on its ball at `0`, by signed regular zeros.
///
/// The boundary sphere is sampled first and a zero there (relative to the quadrature error)
/// is an error. For `n = 2` the Kronecker boundary integral runs as an independent check;
/// a disagreement is reported as degenerate.
pub fn brouwer_degree(field: &dyn BallField, opts: &DegreeOptions) -> Result<DegreeReport> {
    let d = field.dim();
    let r = field.radius();
    let bpts = boundary_points(d, r, opts.boundary_cells)?;
    let bvals: Vec<Vec<f64>> = bpts.par_iter().map(|p| field.eval(p)).collect::<Result<_>>()?;
    let norms: Vec<f64> = bvals.iter().map(|v| norm(v)).collect();
    let (imin, &bmin) = norms
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("boundary grid is nonempty");
    let scale = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let berr = field.error_estimate(&bpts[imin])?;
    if !(bmin > berr) || bmin <= 1e-13 * scale {
        return Err(Error::BoundaryZero(format!(
            "min |V| = {bmin:e} at {:?} against quadrature error {berr:e}",
            bpts[imin]
        )));
    }

    let kronecker = if d == 3 && opts.kronecker {
        let units: Vec<Vec<f64>> = bvals.iter().zip(&norms).map(|(v, n)| v.iter().map(|x| x / n).collect()).collect();
        let w = kronecker_sum(&units, opts.boundary_cells);
        if (w - w.round()).abs() > 0.05 {
            return Err(Error::Degenerate(format!(
                "boundary integral {w} is not near an integer; refine the boundary grid"
            )));
        }
        Some(w.round() as i64)
    } else {
        None
    };

    let target = opts.residual_tol * scale;
    let ends: Vec<Option<(Vec<f64>, f64)>> = seeds(d, r, opts.seeds_per_axis)
        .into_par_iter()
        .map(|s| newton(field, s, target, opts))
        .collect::<Result<_>>()?;
    let mut zeros: Vec<ZeroRecord> = Vec::new();
    let det_floor = opts.det_tol * (scale / r).powi(d as i32);
    for (p, residual) in ends.into_iter().flatten() {
        let det = jacobian(field, &p, opts.fd_step * r)?.determinant();
        if det.abs() <= det_floor {
            return Err(Error::Degenerate(format!("|det DV| = {det:e} at zero {p:?}")));
        }
        let sign = if det > 0.0 { 1 } else { -1 };
        match zeros.iter().find(|z| norm(&sub(&z.p, &p)) <= opts.merge_tol) {
            Some(z) if z.sign != sign => {
                return Err(Error::Degenerate(format!("zeros merged at {p:?} carry opposite Jacobian signs")));
            }
            Some(_) => {}
            None => zeros.push(ZeroRecord { p, sign, residual }),
        }
    }
    zeros.sort_by(|a, b| a.p.iter().zip(&b.p).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let degree = zeros.iter().map(|z| z.sign as i64).sum();
    if let Some(k) = kronecker {
        if k != degree {
            return Err(Error::Degenerate(format!(
                "signed zeros give degree {degree} but the boundary integral gives {k}; refine the seed lattice"
            )));
        }
    }
    Ok(DegreeReport {
        zeros,
        boundary_min_norm: bmin,
        boundary_error: berr,
        degree,
        method: DegreeMethod::SignedZeros,
        kronecker,
    })
}

/// One row of a `t*` sweep: the report, or the reason no degree was reported.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub t_star: f64,
    pub report: Option<DegreeReport>,
    pub error: Option<String>,
}

pub const DEFAULT_T_STAR: f64 = 20.0;
pub const DEFAULT_SWEEP: [f64; 4] = [5.0, 10.0, 20.0, 40.0];

/// Degree of the obstruction field of `spec` for each `t*`.
///
/// Numerical failures become rows with an error; invalid arguments propagate.
pub fn degree_sweep(
    spec: &CurvatureSpec,
    t_stars: &[f64],
    rule: &ObstructionRule,
    opts: &DegreeOptions,
) -> Result<Vec<SweepRow>> {
    let mut out = Vec::new();
    for &t in t_stars {
        let field = ObstructionField::new(spec.clone(), t)?.with_rule(*rule);
        match brouwer_degree(&field, opts) {
            Ok(rep) => out.push(SweepRow { t_star: t, report: Some(rep), error: None }),
            Err(e @ (Error::InvalidArgument(_) | Error::UnsupportedDimension(_))) => return Err(e),
            Err(e) => out.push(SweepRow { t_star: t, report: None, error: Some(e.to_string()) }),
        }
    }
    Ok(out)
}

/// `(P, t, V, |V|)` samples of the obstruction field.
#[derive(Clone, Debug, Serialize)]
pub struct ObstructionSample {
    pub pole: Vec<f64>,
    pub t: f64,
    pub v: Vec<f64>,
    pub norm: f64,
}

pub fn sample_obstruction(
    spec: &CurvatureSpec,
    poles: &[crate::sphere_core::SpherePoint],
    ts: &[f64],
    rule: &ObstructionRule,
) -> Result<Vec<ObstructionSample>> {
    let pairs: Vec<_> = poles.iter().flat_map(|p| ts.iter().map(move |&t| (p, t))).collect();
    pairs
        .into_par_iter()
        .map(|(p, t)| {
            let v = super::obstruction::eval_obstruction(spec, p, t, rule)?;
            Ok(ObstructionSample { pole: p.coords().to_vec(), t, norm: norm(&v), v })
        })
        .collect()
}
