//! The eight subcommands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

use fracq_core::degree::{
    brouwer_degree, compactness_certificate, degree_sweep, index_formula, sample_obstruction, ObstructionField,
};
use fracq_core::flatness::{
    build_matrix_m, classify_kminus, default_shift_grid, hypothesis_margins, kernel_positive_vector, CurvatureSpec,
};
use fracq_core::solver::{
    continuation_blowup, harnack_ratio, pohozaev_residual, profile_error_with, ContinuationOptions, ProfileOptions,
    SolveOptions, Solver,
};
use fracq_core::spectral_ops::{eigenvalue, OperatorSpectrum, RieszOperator};
use fracq_core::sphere_core::{bubble, sphere_area};
use fracq_core::variational::{beckner_check, energy_ek, kazdan_warner_defect_fn};
use fracq_core::{Error, GridField, MoebiusParams, ProblemParams, QuadratureGrid, SpherePoint};

use crate::config::{ConfigError, RunConfig};
use crate::curvature::build_spec;
use crate::output::{num, Output};

#[derive(Debug)]
pub enum RunError {
    /// Exit status 2.
    Config(String),
    /// Exit status 3, with the failing module's message.
    Numerical(String),
    /// Exit status 1.
    Io(std::io::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::InvalidOrder { .. }
            | Error::UnsupportedDimension(_)
            | Error::UnsupportedGrid(_)
            | Error::Parse(_) => RunError::Config(e.to_string()),
            Error::Io(io) => RunError::Io(io),
            other => RunError::Numerical(other.to_string()),
        }
    }
}

pub struct Context {
    pub cfg: RunConfig,
    pub params: ProblemParams,
    pub seed: u64,
}

impl Context {
    fn grid(&self) -> Result<Arc<QuadratureGrid>, RunError> {
        let p = &self.cfg.problem;
        Ok(Arc::new(QuadratureGrid::build(p.n, p.resolution, p.grid)?))
    }

    fn spec(&self) -> Result<CurvatureSpec, RunError> {
        Ok(build_spec(&self.cfg.curvature, self.params.n)?)
    }

    fn sampled_k(&self, grid: &Arc<QuadratureGrid>, spec: &CurvatureSpec) -> GridField {
        GridField::from_fn(grid, |x| spec.value(x))
    }
}

fn point_cells(p: &[f64]) -> Vec<String> {
    p.iter().map(|x| num(*x)).collect()
}

fn coord_header(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("{prefix}{k}")).collect()
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    task: &'a str,
    config_hash: &'a str,
    n: usize,
    sigma: f64,
    result: T,
}

fn summary<T: Serialize>(out: &mut Output, ctx: &Context, task: &str, result: T) -> Result<(), RunError> {
    let hash = out.config_hash().to_string();
    let s = Summary { task, config_hash: &hash, n: ctx.params.n, sigma: ctx.params.sigma, result };
    out.json("summary.json", &s)?;
    Ok(())
}

pub fn spectrum(ctx: &Context, out: &mut Output) -> Result<(), RunError> {
    let l = ctx.cfg.problem.max_degree;
    let s = OperatorSpectrum::new(&ctx.params, l);
    let rows: Vec<Vec<String>> = (0..=l).map(|k| vec![k.to_string(), num(s.get(k))]).collect();
    out.csv("spectrum.csv", &["k", "lambda"], &rows)?;
    #[derive(Serialize)]
    struct R {
        max_degree: usize,
        lambda0: f64,
        ratio_1_0: f64,
        ratio_expected: f64,
        c_intertwine: f64,
        c_riesz: f64,
    }
    let nf = ctx.params.nf();
    let sg = ctx.params.sigma;
    let r = R {
        max_degree: l,
        lambda0: s.get(0),
        ratio_1_0: eigenvalue(1, &ctx.params) / eigenvalue(0, &ctx.params),
        ratio_expected: (nf + 2.0 * sg) / (nf - 2.0 * sg),
        c_intertwine: ctx.params.c_intertwine,
        c_riesz: ctx.params.c_riesz,
    };
    summary(out, ctx, "spectrum", r)
}

/// Unit vector drawn from the seeded generator; on zonal grids only `±N`.
fn random_pole(rng: &mut ChaCha8Rng, grid: &QuadratureGrid) -> SpherePoint {
    let n = grid.n();
    if grid.kind() == fracq_core::GridKind::Zonal {
        let mut c = vec![0.0; n + 1];
        c[n] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return SpherePoint::new(c).expect("pole");
    }
    loop {
        let v: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return SpherePoint::normalized(v).expect("nonzero");
        }
    }
}

fn initial_field(ctx: &Context, grid: &Arc<QuadratureGrid>, rng: &mut ChaCha8Rng) -> Result<GridField, RunError> {
    let s = &ctx.cfg.solve;
    let base = match s.init.as_str() {
        "constant" => GridField::constant(grid, 1.0),
        "bubble" => {
            let pole = match &s.bubble_pole {
                Some(p) => SpherePoint::normalized(p.clone())?,
                None => random_pole(rng, grid),
            };
            bubble(grid, &MoebiusParams::new(pole, s.bubble_t)?, &ctx.params)
        }
        other => return Err(RunError::Config(format!("solve.init must be `constant` or `bubble`, got `{other}`"))),
    };
    if s.perturbation == 0.0 {
        return Ok(base);
    }
    let n = grid.n();
    let zonal = grid.kind() == fracq_core::GridKind::Zonal;
    let c: Vec<f64> = (0..=n).map(|k| if zonal && k < n { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
    let amp = s.perturbation;
    Ok(GridField::new(
        grid.clone(),
        grid.nodes()
            .zip(base.values())
            .map(|(x, v)| v * (1.0 + amp * x.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()))
            .collect(),
    )?)
}

#[derive(Serialize)]
struct SolveSummary {
    report: fracq_core::solver::SolveReport,
    kazdan_warner_defect: Vec<f64>,
    min: f64,
    max: f64,
}

fn run_solve(ctx: &Context, out: &mut Output) -> Result<(fracq_core::solver::SolveReport, Arc<QuadratureGrid>, CurvatureSpec), RunError> {
    let grid = ctx.grid()?;
    let spec = ctx.spec()?;
    let k = ctx.sampled_k(&grid, &spec);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let init = initial_field(ctx, &grid, &mut rng)?;
    let rep = fracq_core::solver::solve(&k, &ctx.cfg.solve.options, &init, &ctx.params)?;
    out.field("field.csv", &rep.v)?;
    Ok((rep, grid, spec))
}

pub fn solve(ctx: &Context, out: &mut Output) -> Result<(), RunError> {
    let (rep, _grid, spec) = run_solve(ctx, out)?;
    let kw = kazdan_warner_defect_fn(&rep.v, spec.global.as_ref(), &ctx.params);
    let converged = rep.converged;
    let s = SolveSummary { min: rep.v.min(), max: rep.v.max(), kazdan_warner_defect: kw, report: rep };
    summary(out, ctx, "solve", &s)?;
    if !converged {
        return Err(RunError::Numerical(format!(
            "solver stopped after {} iterations with residual {:e}",
            s.report.iterations, s.report.residual_sup
        )));
    }
    Ok(())
}

pub fn diagnose(ctx: &Context, out: &mut Output) -> Result<(), RunError> {
    let (rep, grid, spec) = run_solve(ctx, out)?;
    let k = ctx.sampled_k(&grid, &spec);
    let prof = profile_error_with(
        &rep.v,
        &ctx.params,
        &ProfileOptions { exponent: Some(rep.exponent), ..Default::default() },
    )?;
    let cont = ContinuationOptions::default();
    let harnack = harnack_ratio(&rep.v, &prof.center, cont.harnack_radius)?;
    let poho = pohozaev_residual(&rep.v, &k, &prof.center, cont.pohozaev_radius, &ctx.params)?;
    let (lhs, rhs) = beckner_check(&rep.v, &ctx.params)?;
    #[derive(Serialize)]
    struct D {
        solve: SolveSummary,
        profile: fracq_core::solver::ProfileReport,
        harnack_radius: f64,
        harnack_ratio: f64,
        pohozaev_radius: f64,
        pohozaev_residual: f64,
        sobolev_lhs: f64,
        sobolev_rhs: f64,
    }
    let kw = kazdan_warner_defect_fn(&rep.v, spec.global.as_ref(), &ctx.params);
    let d = D {
        solve: SolveSummary { min: rep.v.min(), max: rep.v.max(), kazdan_warner_defect: kw, report: rep },
        profile: prof,
        harnack_radius: cont.harnack_radius,
        harnack_ratio: harnack,
        pohozaev_radius: cont.pohozaev_radius,
        pohozaev_residual: poho,
        sobolev_lhs: lhs,
        sobolev_rhs: rhs,
    };
    summary(out, ctx, "diagnose", &d)
}

pub fn continuation(ctx: &Context, out: &mut Output) -> Result<(), RunError> {
    let grid = ctx.grid()?;
    let spec = ctx.spec()?;
    let k = ctx.sampled_k(&grid, &spec);
    let c = &ctx.cfg.continuation;
    let mut opts = ContinuationOptions::default();
    opts.solve = SolveOptions { damping: c.damping, tol: c.tol, max_iters: c.max_iters, ..ctx.cfg.solve.options.clone() };
    opts.harnack_radius = c.harnack_radius;
    opts.pohozaev_radius = c.pohozaev_radius;
    opts.fit_radius = c.fit_radius;
    opts.min_concentration = c.min_concentration;
    let trace = continuation_blowup(&k, &c.taus, &opts, &ctx.params)?;
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| vec![num(r.tau), num(r.m), num(r.profile_error), num(r.pohozaev_residual)])
        .collect();
    out.csv("trace.csv", &["tau", "m", "profile_error", "pohozaev_residual"], &rows)?;
    if let Some(last) = trace.last() {
        out.field("field.csv", &last.v)?;
    }
    let failure = trace.failure.clone();
    summary(out, ctx, "continue", &trace)?;
    if let Some(f) = failure {
        return Err(RunError::Numerical(format!("continuation stopped at tau = {:e}: {}", f.tau, f.reason)));
    }
    Ok(())
}

pub fn flatness(ctx: &Context, out: &mut Output) -> Result<(), RunError> {
    let spec = ctx.spec()?;
    let n = ctx.params.n;
    let opts = &ctx.cfg.flatness;
    let class = classify_kminus(&spec, &ctx.params, opts)?;
    let margins = hypothesis_margins(&spec, &default_shift_grid(n), &opts.quadrature)?;
    let consistency = spec.consistency();
    let mut header: Vec<String> = vec!["index".into()];
    header.extend(coord_header("q", n + 1));
    header.extend(coord_header("eta", n));
    header.extend(["radial_value", "radial_error", "gradient_residual", "member"].map(String::from));
    let rows: Vec<Vec<String>> = class
        .entries
        .iter()
        .map(|e| {
            let mut r = vec![e.index.to_string()];
            r.extend(point_cells(e.q0.coords()));
            r.extend(point_cells(&e.eta));
            r.extend([num(e.radial_value), num(e.radial_error), num(e.gradient_residual), e.member.to_string()]);
            r
        })
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("kminus.csv", &h, &rows)?;
    let members = class.members();
    let matrix = if members.len() >= 2 { Some(build_matrix_m(&spec, &members, &ctx.params)?) } else { None };
    if let Some(m) = &matrix {
        let rows: Vec<Vec<String>> = (0..m.size())
            .flat_map(|i| (0..m.size()).map(move |j| (i, j)))
            .map(|(i, j)| vec![i.to_string(), j.to_string(), num(m.entries[i][j])])
            .collect();
        out.csv("matrix.csv", &["i", "j", "value"], &rows)?;
    }
    #[derive(Serialize)]
    struct F {
        classification: fracq_core::flatness::Classification,
        hypothesis_margins: Vec<fracq_core::flatness::HypothesisMargins>,
        consistency: Vec<fracq_core::flatness::ConsistencyRow>,
        matrix: Option<fracq_core::flatness::MatrixM>,
        kernel_positive_vector: Option<Vec<f64>>,
    }
    let kernel = matrix.as_ref().and_then(|m| kernel_positive_vector(m, fracq_core::degree::KERNEL_TOL));
    let f = F {
        classification: class,
        hypothesis_margins: margins,
        consistency,
        matrix,
        kernel_positive_vector: kernel,
    };
    summary(out, ctx, "flatness", &f)
}

pub fn degree(ctx: &Context, out: &mut Output) -> Result<(), RunError> {
    let spec = ctx.spec()?;
    let d = &ctx.cfg.degree;
    let n = ctx.params.n;
    let poles: Vec<SpherePoint> = QuadratureGrid::product(n, d.sample_resolution)?
        .nodes()
        .map(|x| SpherePoint::normalized(x.to_vec()))
        .collect::<Result<_, _>>()?;
    let samples = sample_obstruction(&spec, &poles, &d.sample_ts, &d.rule)?;
    let mut header = coord_header("P", n + 1);
    header.push("t".into());
    header.extend(coord_header("V", n + 1));
    header.push("norm".into());
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            let mut r = point_cells(&s.pole);
            r.push(num(s.t));
            r.extend(point_cells(&s.v));
            r.push(num(s.norm));
            r
        })
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("obstruction.csv", &h, &rows)?;
    let sweep = degree_sweep(&spec, &d.sweep, &d.rule, &d.options)?;
    let sweep_rows: Vec<Vec<String>> = sweep
        .iter()
        .map(|r| match &r.report {
            Some(rep) => vec![num(r.t_star), num(rep.boundary_min_norm), num(rep.boundary_error), rep.degree.to_string()],
            None => vec![num(r.t_star), "nan".into(), "nan".into(), "".into()],
        })
        .collect();
    out.csv("sweep.csv", &["t_star", "boundary_min_norm", "boundary_error", "degree"], &sweep_rows)?;
    let main = brouwer_degree(&ObstructionField::new(spec.clone(), d.t_star)?.with_rule(d.rule), &d.options);
    let index = index_formula(&spec).map_err(|e| e.to_string());
    #[derive(Serialize)]
    struct G {
        t_star: f64,
        report: Option<fracq_core::degree::DegreeReport>,
        error: Option<String>,
        sweep: Vec<fracq_core::degree::SweepRow>,
        index_formula: Option<i64>,
        index_formula_error: Option<String>,
        min_sampled_norm: f64,
    }
    let g = G {
        t_star: d.t_star,
        report: main.as_ref().ok().cloned(),
        error: main.as_ref().err().map(|e| e.to_string()),
        sweep,
        index_formula: index.as_ref().ok().copied(),
        index_formula_error: index.err(),
        min_sampled_norm: samples.iter().map(|s| s.norm).fold(f64::INFINITY, f64::min),
    };
    summary(out, ctx, "degree", &g)?;
    main?;
    Ok(())
}

pub fn certify(ctx: &Context, out: &mut Output) -> Result<(), RunError> {
    let spec = ctx.spec()?;
    let cert = compactness_certificate(&spec, &ctx.params, &ctx.cfg.flatness)?;
    let rows: Vec<Vec<String>> = cert
        .pairs
        .iter()
        .map(|p| {
            let k = cert.failing_pairs.iter().find(|f| f.i == p.i && f.j == p.j).and_then(|f| f.kernel.clone());
            vec![
                p.i.to_string(),
                p.j.to_string(),
                p.holds.to_string(),
                k.is_some().to_string(),
            ]
        })
        .collect();
    out.csv("pairs.csv", &["i", "j", "pair_criterion", "positive_kernel"], &rows)?;
    summary(out, ctx, "certify", &cert)
}

/// One line of the verification table.
struct Check {
    name: String,
    value: f64,
    threshold: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold }
    }
    fn pass(&self) -> bool {
        self.value <= self.threshold
    }
}

fn sup_diff(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
    a.iter().enumerate().fold(0.0f64, |m, (i, x)| m.max((x - b(i)).abs()))
}

/// The `K ≡ 1` suite: spectrum, Riesz normalization, constant and bubble solutions,
/// the Sobolev equality and the Kazdan–Warner vector of the constant.
pub fn verify(ctx: &Context, out: &mut Output) -> Result<(), RunError> {
    if ctx.cfg.verify.suite != "constant" {
        return Err(RunError::Config(format!("unknown verify suite `{}`", ctx.cfg.verify.suite)));
    }
    let pr = &ctx.params;
    let (nf, sg) = (pr.nf(), pr.sigma);
    let mut checks = Vec::new();

    let l = ctx.cfg.problem.max_degree;
    let ratio = eigenvalue(1, pr) / eigenvalue(0, pr);
    checks.push(Check::new("eigenvalue_ratio", (ratio - (nf + 2.0 * sg) / (nf - 2.0 * sg)).abs(), 1e-12));
    let rec = (0..l)
        .map(|k| {
            let kf = k as f64;
            let want = (kf + nf / 2.0 + sg) / (kf + nf / 2.0 - sg);
            (eigenvalue(k + 1, pr) / eigenvalue(k, pr) / want - 1.0).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check::new("eigenvalue_recurrence", rec, 1e-12));

    let grid = ctx.grid()?;
    let one = GridField::constant(&grid, 1.0);
    let riesz = RieszOperator::new(&grid, pr)?.apply(one.values())?;
    let lam0 = eigenvalue(0, pr);
    checks.push(Check::new("riesz_normalization", sup_diff(&riesz, |_| 1.0 / lam0) * lam0, 1e-5));

    let opts = SolveOptions { tol: 1e-9, ..ctx.cfg.solve.options.clone() };
    let rep = fracq_core::solver::solve(&one, &opts, &one, pr)?;
    checks.push(Check::new("constant_solution_residual", rep.residual_sup, 1e-8));
    checks.push(Check::new("constant_solution_deviation", sup_diff(rep.v.values(), |_| 1.0), 1e-8));

    let (lhs, rhs) = beckner_check(&one, pr)?;
    checks.push(Check::new("sobolev_equality_constant", (lhs - rhs).abs(), 1e-6));

    let e_one = energy_ek(&one, &one, pr)?;
    let solver = Solver::new(&grid, pr, opts.route)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for &t in &ctx.cfg.verify.bubble_ts {
        let pole = random_pole(&mut rng, &grid);
        let b = bubble(&grid, &MoebiusParams::new(pole, t)?, pr);
        let (lhs, rhs) = beckner_check(&b, pr)?;
        checks.push(Check::new(format!("sobolev_equality_bubble_t{t}"), (lhs - rhs).abs(), 1e-6));
        let e_b = solver.workspace().energy(b.values(), one.values())?;
        checks.push(Check::new(format!("energy_orbit_t{t}"), (e_b - e_one).abs(), 1e-7));
        let r = solver.solve(&one, &opts, &b)?;
        checks.push(Check::new(format!("bubble_solution_residual_t{t}"), r.residual_sup, 1e-7));
    }

    let eps = ctx.cfg.verify.kw_eps;
    let lin = CurvatureSpec::linear_x(pr.n, eps)?;
    let kw = kazdan_warner_defect_fn(&one, lin.global.as_ref(), pr);
    let want = eps * nf * sphere_area(pr.n) / (nf + 1.0);
    let kw_err = kw.iter().enumerate().fold(0.0f64, |m, (i, x)| m.max((x - if i == pr.n { want } else { 0.0 }).abs()));
    checks.push(Check::new("kazdan_warner_constant", kw_err, 1e-8));

    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| vec![c.name.clone(), num(c.value), num(c.threshold), c.pass().to_string()])
        .collect();
    out.csv("checks.csv", &["check", "value", "threshold", "pass"], &rows)?;
    #[derive(Serialize)]
    struct V {
        checks: usize,
        failed: Vec<String>,
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass()).map(|c| c.name.clone()).collect();
    summary(out, ctx, "verify", V { checks: checks.len(), failed: failed.clone() })?;
    if !failed.is_empty() {
        return Err(RunError::Numerical(format!("verification failed: {}", failed.join(", "))));
    }
    Ok(())
}
