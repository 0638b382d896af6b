use serde::Serialize;

use super::chart_view::{ChartView, Directions};
use crate::error::{Error, Result};
use crate::spectral_ops::{analyze, SpectralField};
use crate::sphere_core::quadrature::gauss_legendre;
use crate::sphere_core::{geodesic_distance_raw, GridField, ProblemParams, SpherePoint, StereoChart};

/// Relative tolerance deciding which nodes tie with the maximum.
const PLATEAU_TOL: f64 = 1e-10;

/// Location of the maximum of a spectral interpolant near a starting point.
///
/// Zonal expansions are maximized at the pole nearest `start`; otherwise a damped Newton
/// iteration runs in the chart centered at `start`.
pub fn refine_max(field: &SpectralField, start: &SpherePoint) -> SpherePoint {
    if field.basis().is_zonal() {
        let d = start.dim();
        let mut c = vec![0.0; d + 1];
        c[d] = if start.coords()[d] >= 0.0 { 1.0 } else { -1.0 };
        return SpherePoint::new(c).expect("pole is a unit vector");
    }
    let chart = StereoChart::centered_at(start);
    let n = chart.dim();
    let f = |x: &[f64]| field.evaluate(&chart.forward(x));
    let h = 1e-4;
    let mut x = vec![0.0; n];
    for _ in 0..40 {
        let f0 = f(&x);
        let mut g = vec![0.0; n];
        let mut hess = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let (fp, fm) = (f(&xp), f(&xm));
            g[i] = (fp - fm) / (2.0 * h);
            hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in 0..i {
                let mut a = x.clone();
                a[i] += h;
                a[j] += h;
                let mut b = x.clone();
                b[i] += h;
                b[j] -= h;
                let mut c = x.clone();
                c[i] -= h;
                c[j] += h;
                let mut d = x.clone();
                d[i] -= h;
                d[j] -= h;
                let v = (f(&a) - f(&b) - f(&c) + f(&d)) / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        let gv = nalgebra::DVector::from_vec(g.clone());
        let mut step: Vec<f64> = if let Some(ch) = (-hess).cholesky() {
            ch.solve(&gv).iter().cloned().collect()
        } else {
            g.iter().map(|a| 0.01 * a).collect()
        };
        let len = step.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len > 0.05 {
            step.iter_mut().for_each(|a| *a *= 0.05 / len);
        }
        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        if f(&trial) < f0 {
            break;
        }
        x = trial;
        if len < 1e-12 {
            break;
        }
    }
    SpherePoint::normalized(chart.forward(&x)).expect("chart image is on the sphere")
}

/// Rescaled closeness of a field to the standard bubble profile.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileReport {
    /// Grid maximum of `v`.
    pub m: f64,
    /// `u(0) = 2^{(n−2σ)/2} v(x̄)` in the chart centered at the maximum.
    pub m_u: f64,
    pub center: SpherePoint,
    /// Sup error with `k = k_pred` when `K(x̄)` is known, else with `k = k_fit`.
    pub err: f64,
    pub k_fit: f64,
    pub err_fit: f64,
    pub k_pred: f64,
    /// No concentration (flat field) or a non-symmetric plateau of tied maxima.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    /// Exponent `p`; the critical one when absent.
    pub exponent: Option<f64>,
    /// Sup error is taken over `|y| ≤ fit_radius` in rescaled variables.
    pub fit_radius: f64,
    /// `K(x̄)`, enabling the predicted width `k = K(x̄)^{1/σ}/4`.
    pub k_value: Option<f64>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { exponent: None, fit_radius: 5.0, k_value: None }
    }
}

/// Profile error with the fitted width, at the critical exponent, over `|y| ≤ 5`.
pub fn profile_error(v: &GridField, params: &ProblemParams) -> Result<ProfileReport> {
    profile_error_with(v, params, &ProfileOptions::default())
}

pub fn profile_error_with(v: &GridField, params: &ProblemParams, opts: &ProfileOptions) -> Result<ProfileReport> {
    if v.min() <= 0.0 {
        return Err(Error::InvalidArgument("profile needs a positive field".into()));
    }
    let p = opts.exponent.unwrap_or_else(|| params.critical_exponent());
    let (idx, vmax) = v.argmax();
    let grid = v.grid();
    let field = analyze(v)?;
    let center = refine_max(&field, &grid.point(idx));
    let view = ChartView::from_spectral(field, &center, params);
    let m_u = view.flat_value(&vec![0.0; params.n]);
    let k_pred = opts.k_value.unwrap_or(1.0).powf(1.0 / params.sigma) / 4.0;
    let flat = (vmax - v.min()) <= PLATEAU_TOL * vmax;
    let ties: Vec<f64> = (0..grid.len())
        .filter(|&i| v.values()[i] >= vmax * (1.0 - PLATEAU_TOL))
        .map(|i| geodesic_distance_raw(grid.node(i), center.coords()))
        .collect();
    let ring = ties.iter().all(|d| (d - ties[0]).abs() < 1e-6);
    let degenerate = flat || (ties.len() > 3 && !ring);
    if degenerate {
        return Ok(ProfileReport {
            m: vmax,
            m_u,
            center,
            err: f64::NAN,
            k_fit: f64::NAN,
            err_fit: f64::NAN,
            k_pred,
            degenerate,
        });
    }
    let scale = m_u.powf((p - 1.0) / (2.0 * params.sigma));
    let expo = (2.0 * params.sigma - params.nf()) / 2.0;
    let dirs = Directions::with_resolution(params.n, 16);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for j in 1..=48 {
        let y = opts.fit_radius * j as f64 / 48.0;
        for w in &dirs.points {
            let x: Vec<f64> = w.iter().map(|a| a * y / scale).collect();
            samples.push((y, view.flat_value(&x) / m_u));
        }
    }
    let model = |k: f64, y: f64| (1.0 + k * y * y).powf(expo);
    let sup = |k: f64| samples.iter().fold(0.0f64, |m, (y, u)| m.max((u - model(k, *y)).abs()));
    let sse = |lk: f64| samples.iter().map(|(y, u)| (u - model(lk.exp(), *y)).powi(2)).sum::<f64>();
    let lk = golden_min(sse, (1e-4f64).ln(), (1e3f64).ln(), 1e-12);
    let k_fit = lk.exp();
    let err_fit = sup(k_fit);
    let err = if opts.k_value.is_some() { sup(k_pred) } else { err_fit };
    Ok(ProfileReport { m: vmax, m_u, center, err, k_fit, err_fit, k_pred, degenerate })
}

pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `sup/inf` of `v` over grid nodes at geodesic distance in `[r/2, 2r]` from `center`.
pub fn harnack_ratio(v: &GridField, center: &SpherePoint, r: f64) -> Result<f64> {
    if !(r > 0.0 && 2.0 * r <= std::f64::consts::PI) {
        return Err(Error::InvalidArgument(format!("Harnack radius {r} must lie in (0, π/2]")));
    }
    let grid = v.grid();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, x) in grid.nodes().enumerate() {
        let d = geodesic_distance_raw(x, center.coords());
        if d >= 0.5 * r && d <= 2.0 * r {
            lo = lo.min(v.values()[i]);
            hi = hi.max(v.values()[i]);
        }
    }
    if !lo.is_finite() {
        return Err(Error::GridTooCoarse { exactness: grid.exactness_degree(), required: (4.0 / r).ceil() as usize });
    }
    if lo <= 0.0 {
        return Err(Error::Negativity("field is not positive on the annulus".into()));
    }
    Ok(hi / lo)
}

/// Least squares `values ≈ a·r^{2σ−n} + b`.
pub fn fit_pair_data(radii: &[f64], values: &[f64], params: &ProblemParams) -> Result<(f64, f64)> {
    if radii.len() != values.len() || radii.len() < 2 {
        return Err(Error::InvalidArgument("need at least two matching radii and values".into()));
    }
    let e = params.kernel_exponent();
    let a = nalgebra::DMatrix::from_fn(radii.len(), 2, |i, j| if j == 0 { radii[i].powf(e) } else { 1.0 });
    let y = nalgebra::DVector::from_column_slice(values);
    let svd = a.svd(true, true);
    let sol = svd.solve(&y, 1e-14).map_err(|e| Error::Singular(e.to_string()))?;
    Ok((sol[0], sol[1]))
}

/// Spherical means of `m_u·u` at the given chart radii.
pub fn pair_profile(view: &ChartView, m_u: f64, radii: &[f64]) -> Vec<f64> {
    radii.iter().map(|&r| m_u * view.spherical_mean(r, |u| u)).collect()
}

/// Moments `∫ |x|^s u^{p+1}` for `s ∈ {−1, 0, 1, n}` over the inner ball `|x| ≤ r_in` and
/// the shell `r_in < |x| ≤ 1` of the chart.
pub fn moments(view: &ChartView, p: f64, r_in: f64) -> ([f64; 4], [f64; 4]) {
    let n = view.chart().dim();
    let powers = [-1.0, 0.0, 1.0, n as f64];
    let area = crate::sphere_core::sphere_area(n - 1);
    let integrate = |a: f64, b: f64| {
        let mut out = [0.0; 4];
        for (r, w) in graded_panels(a, b, 12).iter() {
            let m = view.spherical_mean(*r, |u| u.powf(p + 1.0)) * area * r.powi(n as i32 - 1) * w;
            for (o, s) in out.iter_mut().zip(&powers) {
                *o += m * r.powf(*s);
            }
        }
        out
    };
    (integrate(0.0, r_in), integrate(r_in, 1.0))
}

/// Gauss–Legendre on dyadic panels refined toward `a`.
pub(crate) fn graded_panels(a: f64, b: f64, depth: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(12);
    let mut edges = vec![a];
    for k in (0..depth).rev() {
        edges.push(a + (b - a) / 2f64.powi(k as i32));
    }
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let r = rule.mapped(w[0], w[1]);
        out.extend(r.nodes.iter().cloned().zip(r.weights.iter().cloned()));
    }
    out
}

/// Number of critical points of `w̄(r) = r^{2σ/(p−1)} ū(r)` on `(0, ρ)`, with `ū` the
/// spherical mean of `u` in the chart.
pub fn wbar_critical_points(view: &ChartView, p: f64, sigma: f64, rho: f64) -> usize {
    let e = 2.0 * sigma / (p - 1.0);
    let samples: Vec<f64> = (0..=400)
        .map(|j| rho * 10f64.powf(-4.0 + 4.0 * j as f64 / 400.0))
        .map(|r| r.powf(e) * view.spherical_mean(r, |u| u))
        .collect();
    let diffs: Vec<f64> = samples.windows(2).map(|w| w[1] - w[0]).filter(|d| d.abs() > 1e-13).collect();
    diffs.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_core::{bubble, geodesic_distance, GridKind, MoebiusParams, QuadratureGrid};
    use std::sync::Arc;

    fn bubble_at(res: usize, kind: GridKind, conc: &[f64], t: f64) -> (GridField, ProblemParams, SpherePoint) {
        let g = Arc::new(QuadratureGrid::build(2, res, kind).unwrap());
        let pr = ProblemParams::new(2, 0.5).unwrap();
        let c = SpherePoint::normalized(conc.to_vec()).unwrap();
        let m = MoebiusParams::new(c.antipode(), t).unwrap();
        (bubble(&g, &m, &pr), pr, c)
    }

    #[test]
    fn exact_bubble_profile() {
        let (v, pr, c) = bubble_at(96, GridKind::Product, &[0.2, -0.5, 0.6], 10.0);
        let r = profile_error(&v, &pr).unwrap();
        assert!(!r.degenerate);
        assert!(geodesic_distance(&r.center, &c) < 1e-6);
        assert!(r.err <= 1e-3, "{}", r.err);
        assert!((r.k_fit - 0.25).abs() < 1e-3, "{}", r.k_fit);
        assert!((r.m_u - 20f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn flat_field_is_degenerate() {
        let g = Arc::new(QuadratureGrid::build(2, 16, GridKind::Product).unwrap());
        let pr = ProblemParams::new(2, 0.5).unwrap();
        let r = profile_error(&GridField::constant(&g, 1.0), &pr).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.m, 1.0);
    }

    #[test]
    fn harnack_on_bubbles_is_bounded() {
        for t in [4.0, 8.0, 16.0] {
            let (v, pr, c) = bubble_at(96, GridKind::Product, &[0.0, 0.3, 0.8], t);
            let m_u = (2.0 * t).sqrt();
            let r = 5.0 * m_u.powf(-(pr.critical_exponent() - 1.0) / (2.0 * pr.sigma));
            let h = harnack_ratio(&v, &c, r).unwrap();
            assert!((1.0..=20.0).contains(&h), "{t}: {h}");
        }
        let (v, _, c) = bubble_at(16, GridKind::Product, &[0.0, 0.0, 1.0], 1.0);
        assert!((harnack_ratio(&v, &c, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(harnack_ratio(&v, &c, 1e-4).is_err());
    }

    #[test]
    fn planted_pair_data_is_recovered() {
        let pr = ProblemParams::new(2, 0.5).unwrap();
        let radii = [0.3, 0.5, 0.7, 1.0];
        let vals: Vec<f64> = radii.iter().map(|r| 2.0 / r + 1.0).collect();
        let (a, b) = fit_pair_data(&radii, &vals, &pr).unwrap();
        assert!((a - 2.0).abs() < 1e-8 && (b - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bubble_has_one_wbar_critical_point() {
        let (v, pr, c) = bubble_at(64, GridKind::Zonal, &[0.0, 0.0, 1.0], 6.0);
        let view = ChartView::new(&v, &c, &pr).unwrap();
        assert_eq!(wbar_critical_points(&view, pr.critical_exponent(), pr.sigma, 1.0), 1);
    }
}
