use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::solver::Directions;
use crate::sphere_core::{Constant, FnSphere, SphereFunction, SpherePoint, StereoChart};

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A function on `R^n` homogeneous of degree `β`: `Q(λy) = λ^β Q(y)` for `λ > 0`.
#[derive(Clone)]
pub enum HomogeneousQ {
    /// `Q(y) = Σ a_j |y_j|^β`.
    Canonical { a: Vec<f64>, beta: f64 },
    /// User closure; `scale` multiplies both the value and the gradient.
    Custom { dim: usize, beta: f64, value: ValueFn, gradient: GradFn, scale: f64 },
}

impl fmt::Debug for HomogeneousQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Canonical { a, beta } => write!(f, "Canonical {{ a: {a:?}, beta: {beta} }}"),
            Self::Custom { dim, beta, scale, .. } => {
                write!(f, "Custom {{ dim: {dim}, beta: {beta}, scale: {scale} }}")
            }
        }
    }
}

impl HomogeneousQ {
    pub fn canonical(a: Vec<f64>, beta: f64) -> Self {
        Self::Canonical { a, beta }
    }

    pub fn custom(
        dim: usize,
        beta: f64,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::Custom { dim, beta, value: Arc::new(value), gradient: Arc::new(gradient), scale: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Canonical { a, .. } => a.len(),
            Self::Custom { dim, .. } => *dim,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            Self::Canonical { beta, .. } | Self::Custom { beta, .. } => *beta,
        }
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        match self {
            Self::Canonical { a, .. } => Some(a),
            Self::Custom { .. } => None,
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            Self::Canonical { a, beta } => a.iter().zip(y).map(|(c, x)| c * x.abs().powf(*beta)).sum(),
            Self::Custom { value, scale, .. } => scale * value(y),
        }
    }

    /// Gradient; for the canonical family a vanishing coordinate contributes 0.
    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Self::Canonical { a, beta } => a
                .iter()
                .zip(y)
                .map(|(c, x)| if *x == 0.0 { 0.0 } else { c * beta * x.abs().powf(beta - 1.0) * x.signum() })
                .collect(),
            Self::Custom { gradient, scale, .. } => gradient(y).into_iter().map(|g| scale * g).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Self::Canonical { a, beta } => Self::Canonical { a: a.iter().map(|x| c * x).collect(), beta: *beta },
            Self::Custom { dim, beta, value, gradient, scale } => Self::Custom {
                dim: *dim,
                beta: *beta,
                value: value.clone(),
                gradient: gradient.clone(),
                scale: scale * c,
            },
        }
    }
}

/// Local expansion `K(y) = K(0) + Q(y) + R(y)` at a critical point, in the
/// stereographic chart whose origin is `q0`.
#[derive(Clone, Debug)]
pub struct LocalModel {
    pub q0: SpherePoint,
    pub q: HomogeneousQ,
    /// Claimed decay exponent of the remainder: `|R(y)| = O(|y|^remainder_order)`.
    pub remainder_order: f64,
}

/// Sampled checks of the model's own structure.
#[derive(Clone, Debug, Serialize)]
pub struct ModelStructure {
    /// Max of `|Q(λy) − λ^β Q(y)|` over `λ ∈ {0.5, 2}` and unit `y`.
    pub homogeneity_defect: f64,
    /// Min and max of `|∇Q(y)|` over unit `y` (the constants of `|∇Q| ~ |y|^{β−1}`).
    pub gradient_lower: f64,
    pub gradient_upper: f64,
}

impl LocalModel {
    pub fn new(q0: SpherePoint, q: HomogeneousQ, remainder_order: f64) -> Result<Self> {
        if q0.dim() != q.dim() {
            return Err(Error::InvalidArgument(format!(
                "model of dimension {} at a point of S^{}",
                q.dim(),
                q0.dim()
            )));
        }
        if !(q.beta() > 0.0 && q.beta().is_finite()) {
            return Err(Error::InvalidArgument(format!("flatness order {} must be positive", q.beta())));
        }
        Ok(Self { q0, q, remainder_order })
    }

    pub fn canonical(q0: SpherePoint, a: Vec<f64>, beta: f64) -> Result<Self> {
        Self::new(q0, HomogeneousQ::canonical(a, beta), f64::INFINITY)
    }

    pub fn n(&self) -> usize {
        self.q.dim()
    }

    pub fn beta(&self) -> f64 {
        self.q.beta()
    }

    pub fn chart(&self) -> StereoChart {
        StereoChart::centered_at(&self.q0)
    }

    /// `i(q0)`: the number of negative canonical coefficients.
    pub fn negative_count(&self) -> Option<usize> {
        self.q.coefficients().map(|a| a.iter().filter(|&&c| c < 0.0).count())
    }

    pub fn structure(&self) -> ModelStructure {
        let dirs = Directions::with_resolution(self.n(), 64);
        let beta = self.beta();
        let mut defect: f64 = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for w in &dirs.points {
            let q1 = self.q.value(w);
            for lam in [0.5, 2.0] {
                let y: Vec<f64> = w.iter().map(|x| lam * x).collect();
                defect = defect.max((self.q.value(&y) - lam.powf(beta) * q1).abs());
            }
            let g = self.q.gradient(w).iter().map(|x| x * x).sum::<f64>().sqrt();
            lo = lo.min(g);
            hi = hi.max(g);
        }
        ModelStructure { homogeneity_defect: defect, gradient_lower: lo, gradient_upper: hi }
    }
}

/// Remainder ratios `max_ω |K(F(rω)) − K(q0) − Q(rω)| / r^β` at shrinking radii.
#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyRow {
    pub index: usize,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// The prescribed function together with its declared local models.
#[derive(Clone)]
pub struct CurvatureSpec {
    pub n: usize,
    pub name: String,
    pub global: Arc<dyn SphereFunction>,
    pub critical_points: Vec<LocalModel>,
    pub consistency_radius: f64,
}

impl fmt::Debug for CurvatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurvatureSpec")
            .field("n", &self.n)
            .field("name", &self.name)
            .field("critical_points", &self.critical_points)
            .field("consistency_radius", &self.consistency_radius)
            .finish()
    }
}

impl CurvatureSpec {
    pub fn new(
        n: usize,
        name: impl Into<String>,
        global: Arc<dyn SphereFunction>,
        critical_points: Vec<LocalModel>,
    ) -> Result<Self> {
        if let Some(m) = critical_points.iter().find(|m| m.n() != n) {
            return Err(Error::InvalidArgument(format!("model of dimension {} in a spec on S^{n}", m.n())));
        }
        Ok(Self { n, name: name.into(), global, critical_points, consistency_radius: 0.2 })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.global.value(x)
    }

    /// `K ≡ c`, with no declared critical points.
    pub fn constant(n: usize, c: f64) -> Result<Self> {
        if c <= 0.0 {
            return Err(Error::InvalidArgument(format!("constant {c} is not positive")));
        }
        Self::new(n, "constant", Arc::new(Constant(c)), Vec::new())
    }

    /// `K = 1 + ε x_{n+1}`: maximum at the north pole, minimum at the south pole.
    ///
    /// In the chart centered at `±N`, `x_{n+1} = ±(1−|y|²)/(1+|y|²)`, so `Q = ∓2ε|y|²`.
    pub fn linear_x(n: usize, eps: f64) -> Result<Self> {
        if !(eps.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("1 + {eps} x_(n+1) is not positive")));
        }
        let global = Arc::new(LinearHeight { eps });
        let mut models = Vec::new();
        if eps != 0.0 {
            let north = SpherePoint::north(n);
            models.push(LocalModel::new(north.clone(), HomogeneousQ::canonical(vec![-2.0 * eps; n], 2.0), 4.0)?);
            models.push(LocalModel::new(north.antipode(), HomogeneousQ::canonical(vec![2.0 * eps; n], 2.0), 4.0)?);
        }
        Self::new(n, "linear-x", global, models)
    }

    /// `K = c + b·x + xᵀAx`.
    ///
    /// Local models are derived when `b = 0` and `A` is diagonal with distinct entries
    /// (critical points `±e_k`, `a_j = 4(A_jj − A_kk)` along the chart frame).
    /// Otherwise the caller declares models with [`CurvatureSpec::with_models`].
    pub fn quadratic_poly(n: usize, c: f64, b: Vec<f64>, a: Vec<Vec<f64>>) -> Result<Self> {
        let d = n + 1;
        if b.len() != d || a.len() != d || a.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument(format!("quadratic coefficients must have size {d}")));
        }
        let poly = QuadraticPoly { c, b: b.clone(), a: a.clone() };
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || a[i][j] == 0.0 && a[j][i] == 0.0));
        let diag: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
        let distinct = (0..d).all(|i| (0..i).all(|j| diag[i] != diag[j]));
        let mut models = Vec::new();
        if b.iter().all(|&x| x == 0.0) && diagonal && distinct {
            for k in 0..d {
                let coeffs: Vec<f64> = (0..d).filter(|&j| j != k).map(|j| 4.0 * (diag[j] - diag[k])).collect();
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; d];
                    e[k] = s;
                    models.push(LocalModel::new(SpherePoint::new(e)?, HomogeneousQ::canonical(coeffs.clone(), 2.0), 4.0)?);
                }
            }
        }
        Self::new(n, "quadratic-poly", Arc::new(poly), models)
    }

    /// `K = base + Σ_i χ(d(x, q_i)) Q_i(y_i(x))`, with `χ = 1` on `d ≤ ρ/2` and `0` beyond `ρ`.
    ///
    /// Each declared point then has the exact canonical expansion near it. Points must be
    /// more than `2ρ` apart; `K > 0` is checked on a sample.
    pub fn flatness_demo(n: usize, base: f64, rho: f64, points: Vec<(SpherePoint, Vec<f64>, f64)>) -> Result<Self> {
        if !(rho > 0.0 && rho < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!("cutoff radius {rho} must lie in (0, π/2)")));
        }
        let mut models = Vec::new();
        for (i, (p, a, beta)) in points.iter().enumerate() {
            for (q, ..) in &points[..i] {
                if crate::sphere_core::geodesic_distance(p, q) <= 2.0 * rho {
                    return Err(Error::InvalidArgument("demo points closer than twice the cutoff".into()));
                }
            }
            models.push(LocalModel::new(p.clone(), HomogeneousQ::canonical(a.clone(), *beta), f64::INFINITY)?);
        }
        let pieces: Vec<(StereoChart, SpherePoint, HomogeneousQ)> =
            models.iter().map(|m| (m.chart(), m.q0.clone(), m.q.clone())).collect();
        let global = FnSphere(move |x: &[f64]| {
            let mut k = base;
            for (chart, q0, q) in &pieces {
                let d = crate::sphere_core::geodesic_distance_raw(x, q0.coords());
                if d < rho {
                    if let Some(y) = chart.inverse(x) {
                        k += smooth_cutoff(d / rho) * q.value(&y);
                    }
                }
            }
            k
        });
        let mut spec = Self::new(n, "flatness-demo", Arc::new(global), models)?;
        // chart radius whose image has geodesic radius ρ/2
        spec.consistency_radius = (rho / 4.0).tan();
        spec.check_positive()?;
        Ok(spec)
    }

    /// Replaces the declared local models.
    pub fn with_models(mut self, models: Vec<LocalModel>) -> Result<Self> {
        if let Some(m) = models.iter().find(|m| m.n() != self.n) {
            return Err(Error::InvalidArgument(format!("model of dimension {} in a spec on S^{}", m.n(), self.n)));
        }
        self.critical_points = models;
        Ok(self)
    }

    /// Minimum of `K` over a sampling grid; errors if it is not positive.
    pub fn check_positive(&self) -> Result<f64> {
        let grid = crate::sphere_core::QuadratureGrid::product(self.n, 48)?;
        let min = grid.nodes().map(|x| self.value(x)).fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::Negativity(format!("K attains {min:e} on the sampling grid")));
        }
        Ok(min)
    }

    pub fn consistency(&self) -> Vec<ConsistencyRow> {
        let dirs = Directions::with_resolution(self.n, 32);
        self.critical_points
            .iter()
            .enumerate()
            .map(|(index, m)| {
                let chart = m.chart();
                let k0 = self.value(m.q0.coords());
                let radii: Vec<f64> = (0..6).map(|k| self.consistency_radius * 0.5f64.powi(k)).collect();
                let ratios = radii
                    .iter()
                    .map(|&r| {
                        dirs.points
                            .iter()
                            .map(|w| {
                                let y: Vec<f64> = w.iter().map(|x| r * x).collect();
                                (self.value(&chart.forward(&y)) - k0 - m.q.value(&y)).abs() / r.powf(m.beta())
                            })
                            .fold(0.0, f64::max)
                    })
                    .collect();
                ConsistencyRow { index, radii, ratios }
            })
            .collect()
    }
}

/// `C^∞` step: 1 on `[0, 1/2]`, 0 on `[1, ∞)`.
fn smooth_cutoff(s: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let u = 2.0 * (1.0 - s);
    f(u) / (f(u) + f(1.0 - u))
}

struct LinearHeight {
    eps: f64,
}

impl SphereFunction for LinearHeight {
    fn value(&self, x: &[f64]) -> f64 {
        1.0 + self.eps * x[x.len() - 1]
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let t = x[d - 1];
        (0..d).map(|i| self.eps * ((i == d - 1) as u8 as f64 - t * x[i])).collect()
    }
}

struct QuadraticPoly {
    c: f64,
    b: Vec<f64>,
    a: Vec<Vec<f64>>,
}

impl SphereFunction for QuadraticPoly {
    fn value(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.b.iter().zip(x).map(|(b, x)| b * x).sum();
        let quad: f64 = (0..x.len()).map(|i| x[i] * (0..x.len()).map(|j| self.a[i][j] * x[j]).sum::<f64>()).sum();
        self.c + lin + quad
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let g: Vec<f64> =
            (0..d).map(|i| self.b[i] + (0..d).map(|j| (self.a[i][j] + self.a[j][i]) * x[j]).sum::<f64>()).collect();
        let gx: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
        g.iter().zip(x).map(|(gi, xi)| gi - gx * xi).collect()
    }
}
