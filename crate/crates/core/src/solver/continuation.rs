use serde::Serialize;

use super::chart_view::ChartView;
use super::diagnostics::{
    fit_pair_data, harnack_ratio, moments, pair_profile, profile_error_with, refine_max, wbar_critical_points,
    ProfileOptions,
};
use super::fixed_point::{SolveOptions, Solver};
use super::pohozaev::pohozaev_terms;
use crate::error::{Error, Result};
use crate::spectral_ops::analyze;
use crate::sphere_core::{geodesic_distance, GridField, ProblemParams, SpherePoint};

/// Smallest `m_u` at which the pair-limit fit is attempted by default.
pub const DEFAULT_MIN_CONCENTRATION: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct ContinuationOptions {
    pub solve: SolveOptions,
    /// Harnack annulus `[r/2, 2r]` around each concentration point. The default `π/2`
    /// is the outer region at geodesic distance `[π/4, π]`.
    pub harnack_radius: f64,
    /// Ball radius of the Pohozaev residual, in chart units.
    pub pohozaev_radius: f64,
    /// Rescaled radius of the profile comparison.
    pub fit_radius: f64,
    /// Chart radii of the pair-limit fit.
    pub probe_radii: Vec<f64>,
    pub min_concentration: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions { damping: 0.5, tol: 1e-9, max_iters: 20000, ..Default::default() },
            harnack_radius: std::f64::consts::FRAC_PI_2,
            pohozaev_radius: 1.0,
            fit_radius: 5.0,
            probe_radii: default_probe_radii(),
            min_concentration: DEFAULT_MIN_CONCENTRATION,
        }
    }
}

/// Eight chart radii evenly spaced on `[0.3, 1]`.
pub fn default_probe_radii() -> Vec<f64> {
    (0..8).map(|j| 0.3 + 0.1 * j as f64).collect()
}

/// Diagnostics of one converged subcritical solution.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRecord {
    pub tau: f64,
    pub exponent: f64,
    pub m: f64,
    pub m_u: f64,
    pub center: SpherePoint,
    /// Geodesic distance from the concentration point to the maximum point of `K`.
    pub distance_to_k_max: f64,
    /// Profile error with the predicted width.
    pub profile_error: f64,
    pub k_pred: f64,
    pub k_fit: f64,
    pub profile_error_fit: f64,
    pub harnack_ratio: f64,
    pub pohozaev_residual: f64,
    pub pair_constant_a_fit: f64,
    pub pair_constant_b_fit: f64,
    /// `m_u·ū(1)`, the spherical mean of `m_u·u` at chart radius one.
    pub unit_sphere_mean: f64,
    /// Critical points of `r^{2σ/(p−1)}ū(r)` on `(0, 1)`; one for an isolated simple point.
    pub wbar_critical_points: usize,
    pub residual_sup: f64,
    pub iterations: usize,
    pub energy: f64,
    #[serde(skip)]
    pub v: GridField,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceFailure {
    pub tau: f64,
    pub reason: String,
}

/// Records sorted by decreasing `τ`, truncated at the first failed solve.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupTrace {
    pub params: ProblemParams,
    pub k_max_point: SpherePoint,
    pub k_max_value: f64,
    pub records: Vec<TraceRecord>,
    pub failure: Option<TraceFailure>,
    #[serde(skip)]
    pub fit_radius: f64,
}

impl BlowupTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

pub fn continuation_blowup(
    k: &GridField,
    tau_schedule: &[f64],
    opts: &ContinuationOptions,
    params: &ProblemParams,
) -> Result<BlowupTrace> {
    if tau_schedule.is_empty() || tau_schedule.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("τ schedule must be nonempty and positive".into()));
    }
    if tau_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("τ schedule must be strictly decreasing".into()));
    }
    let grid = k.grid();
    let solver = Solver::new(grid, params, opts.solve.route)?;
    let kfield = analyze(k)?;
    let (kidx, _) = k.argmax();
    let k_max_point = refine_max(&kfield, &grid.point(kidx));
    let k_max_value = kfield.evaluate(k_max_point.coords());
    let mut trace = BlowupTrace {
        params: *params,
        k_max_point,
        k_max_value,
        records: Vec::new(),
        failure: None,
        fit_radius: opts.fit_radius,
    };
    let mut init = GridField::constant(grid, 1.0);
    for &tau in tau_schedule {
        let sopts = SolveOptions { tau, ..opts.solve.clone() };
        let report = match solver.solve(k, &sopts, &init) {
            Ok(r) => r,
            Err(e) => {
                trace.failure = Some(TraceFailure { tau, reason: e.to_string() });
                break;
            }
        };
        let record = diagnose(&report.v, k, &kfield, &trace, opts, report.exponent, tau)
            .map(|mut rec| {
                rec.residual_sup = report.residual_sup;
                rec.iterations = report.iterations;
                rec.energy = report.energy;
                rec
            });
        match record {
            Ok(rec) => trace.records.push(rec),
            Err(e) => {
                trace.failure = Some(TraceFailure { tau, reason: e.to_string() });
                break;
            }
        }
        init = report.v;
    }
    Ok(trace)
}

fn diagnose(
    v: &GridField,
    kgrid: &GridField,
    kfield: &crate::spectral_ops::SpectralField,
    trace: &BlowupTrace,
    opts: &ContinuationOptions,
    p: f64,
    tau: f64,
) -> Result<TraceRecord> {
    let params = &trace.params;
    let (idx, _) = v.argmax();
    let vfield = analyze(v)?;
    let center = refine_max(&vfield, &v.grid().point(idx));
    let k_center = kfield.evaluate(center.coords());
    let popts = ProfileOptions { exponent: Some(p), fit_radius: opts.fit_radius, k_value: Some(k_center) };
    let prof = profile_error_with(v, params, &popts)?;
    let view = ChartView::from_spectral(vfield, &center, params);
    let m_u = prof.m_u;
    let harnack = harnack_ratio(v, &center, opts.harnack_radius).unwrap_or(f64::NAN);
    let pohozaev = pohozaev_terms(v, kgrid, &center, opts.pohozaev_radius, params, p)
        .map(|t| t.residual)
        .unwrap_or(f64::NAN);
    let (a, b) = if m_u >= opts.min_concentration {
        let vals = pair_profile(&view, m_u, &opts.probe_radii);
        fit_pair_data(&opts.probe_radii, &vals, params).unwrap_or((f64::NAN, f64::NAN))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(TraceRecord {
        tau,
        exponent: p,
        m: prof.m,
        m_u,
        distance_to_k_max: geodesic_distance(&center, &trace.k_max_point),
        profile_error: prof.err,
        k_pred: prof.k_pred,
        k_fit: prof.k_fit,
        profile_error_fit: prof.err_fit,
        harnack_ratio: harnack,
        pohozaev_residual: pohozaev,
        pair_constant_a_fit: a,
        pair_constant_b_fit: b,
        unit_sphere_mean: m_u * view.spherical_mean(1.0, |u| u),
        wbar_critical_points: wbar_critical_points(&view, p, params.sigma, 1.0),
        residual_sup: f64::NAN,
        iterations: 0,
        energy: f64::NAN,
        center,
        v: v.clone(),
    })
}

/// Least-squares `m_u·u ≈ a|x|^{2σ−n} + b` on the last record, requiring `m_u ≥ 2`.
pub fn pair_limit_fit(trace: &BlowupTrace, probe_radii: &[f64]) -> Result<(f64, f64)> {
    pair_limit_fit_with(trace, probe_radii, DEFAULT_MIN_CONCENTRATION)
}

pub fn pair_limit_fit_with(trace: &BlowupTrace, probe_radii: &[f64], min_concentration: f64) -> Result<(f64, f64)> {
    let last = trace.last().ok_or_else(|| Error::InsufficientConcentration("empty trace".into()))?;
    if !(last.m_u >= min_concentration) {
        return Err(Error::InsufficientConcentration(format!(
            "m_u = {:.4} is below {min_concentration}",
            last.m_u
        )));
    }
    let view = ChartView::new(&last.v, &last.center, &trace.params)?;
    let vals = pair_profile(&view, last.m_u, probe_radii);
    fit_pair_data(probe_radii, &vals, &trace.params)
}

/// The limit constant `2^{n−2σ}·K(q)^{(2σ−n)/(2σ)}` the pair fit is compared with.
pub fn pair_limit_prediction(params: &ProblemParams, k_at_limit: f64) -> f64 {
    let gap = params.nf() - 2.0 * params.sigma;
    2f64.powf(gap) * k_at_limit.powf(-gap / (2.0 * params.sigma))
}

/// Moments of `u^{p+1}` over inner balls and outer shells along a trace.
#[derive(Clone, Debug, Serialize)]
pub struct MomentTable {
    pub powers: [f64; 4],
    pub rows: Vec<MomentRow>,
    /// Slopes of `log moment` against `log m_u` (NaN with fewer than two rows).
    pub inner_exponents: [f64; 4],
    pub outer_exponents: [f64; 4],
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub tau: f64,
    pub m_u: f64,
    pub inner_radius: f64,
    pub inner: [f64; 4],
    pub outer: [f64; 4],
}

pub fn moment_table(trace: &BlowupTrace) -> Result<MomentTable> {
    let params = &trace.params;
    let mut rows = Vec::new();
    for rec in &trace.records {
        let view = ChartView::new(&rec.v, &rec.center, params)?;
        let r_in = (trace.fit_radius * rec.m_u.powf(-(rec.exponent - 1.0) / (2.0 * params.sigma))).min(0.5);
        let (inner, outer) = moments(&view, rec.exponent, r_in);
        rows.push(MomentRow { tau: rec.tau, m_u: rec.m_u, inner_radius: r_in, inner, outer });
    }
    let slope = |pick: &dyn Fn(&MomentRow) -> f64| -> f64 {
        if rows.len() < 2 {
            return f64::NAN;
        }
        let xs: Vec<f64> = rows.iter().map(|r| r.m_u.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| pick(r).abs().max(1e-300).ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            f64::NAN
        }
    };
    let mut inner_exponents = [0.0; 4];
    let mut outer_exponents = [0.0; 4];
    for j in 0..4 {
        inner_exponents[j] = slope(&|r: &MomentRow| r.inner[j]);
        outer_exponents[j] = slope(&|r: &MomentRow| r.outer[j]);
    }
    Ok(MomentTable { powers: [-1.0, 0.0, 1.0, params.nf()], rows, inner_exponents, outer_exponents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_core::{GridKind, QuadratureGrid};
    use std::sync::Arc;

    #[test]
    fn constant_curvature_stays_bounded() {
        let g = Arc::new(QuadratureGrid::build(2, 24, GridKind::Zonal).unwrap());
        let pr = ProblemParams::new(2, 0.5).unwrap();
        let one = GridField::constant(&g, 1.0);
        let tr = continuation_blowup(&one, &[0.4, 0.2, 0.1], &ContinuationOptions::default(), &pr).unwrap();
        assert_eq!(tr.records.len(), 3);
        assert!(tr.failure.is_none());
        for r in &tr.records {
            assert!((r.m - 1.0).abs() < 1e-8, "{}", r.m);
        }
        assert!(pair_limit_fit(&tr, &default_probe_radii()).is_err());
    }

    #[test]
    fn schedule_must_decrease() {
        let g = Arc::new(QuadratureGrid::build(2, 8, GridKind::Zonal).unwrap());
        let pr = ProblemParams::new(2, 0.5).unwrap();
        let one = GridField::constant(&g, 1.0);
        let o = ContinuationOptions::default();
        assert!(continuation_blowup(&one, &[0.1, 0.2], &o, &pr).is_err());
        assert!(continuation_blowup(&one, &[0.1, 0.0], &o, &pr).is_err());
    }

    #[test]
    fn prediction_constant() {
        let pr = ProblemParams::new(2, 0.5).unwrap();
        assert!((pair_limit_prediction(&pr, 1.0) - 2.0).abs() < 1e-15);
        assert!((pair_limit_prediction(&pr, 1.1) - 2.0 / 1.1).abs() < 1e-15);
    }
}
