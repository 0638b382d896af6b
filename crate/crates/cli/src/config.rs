//! Run configuration read from a TOML file.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use fracq_core::degree::{DegreeOptions, ObstructionRule, DEFAULT_SWEEP, DEFAULT_T_STAR};
use fracq_core::flatness::ClassifyOptions;
use fracq_core::solver::SolveOptions;
use fracq_core::{GridKind, ProblemParams};

/// A configuration problem, reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub n: usize,
    pub sigma: f64,
    /// Largest harmonic degree of the spectrum table.
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_grid")]
    pub grid: GridKind,
}

fn default_max_degree() -> usize {
    32
}
fn default_resolution() -> usize {
    32
}
fn default_grid() -> GridKind {
    GridKind::Product
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Critical point on `S^n` (normalized on read).
    pub q: Vec<f64>,
    /// Coefficients of `Σ a_j |y_j|^β`.
    pub a: Vec<f64>,
    pub beta: f64,
    #[serde(default = "default_remainder")]
    pub remainder_order: f64,
}

fn default_remainder() -> f64 {
    f64::INFINITY
}

/// Either a builtin with its parameters or a field file in the columnar grid format.
/// With neither, `K ≡ 1`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    pub builtin: Option<String>,
    pub file: Option<PathBuf>,
    /// `constant`: the value.
    pub value: Option<f64>,
    /// `linear-x`: `1 + ε x_{n+1}`.
    pub eps: Option<f64>,
    /// `quadratic-poly`: `c + b·x + xᵀAx`.
    pub c: Option<f64>,
    pub b: Option<Vec<f64>>,
    pub a: Option<Vec<Vec<f64>>>,
    /// `flatness-demo`: base level, bump radius and the model points.
    pub base: Option<f64>,
    pub rho: Option<f64>,
    pub points: Option<Vec<ModelConfig>>,
    /// Critical-point models declared in place of the builtin's own.
    pub models: Option<Vec<ModelConfig>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveSection {
    #[serde(flatten)]
    pub options: SolveOptions,
    /// `constant` or `bubble`.
    pub init: String,
    pub bubble_pole: Option<Vec<f64>>,
    pub bubble_t: f64,
    /// Amplitude of a seeded random degree-1 perturbation of the initial field.
    pub perturbation: f64,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            options: SolveOptions::default(),
            init: "constant".into(),
            bubble_pole: None,
            bubble_t: 2.0,
            perturbation: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinueSection {
    pub taus: Vec<f64>,
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub harnack_radius: f64,
    pub pohozaev_radius: f64,
    pub fit_radius: f64,
    pub min_concentration: f64,
}

impl Default for ContinueSection {
    fn default() -> Self {
        let c = fracq_core::solver::ContinuationOptions::default();
        Self {
            taus: vec![0.4, 0.2, 0.1, 0.05],
            damping: c.solve.damping,
            tol: c.solve.tol,
            max_iters: c.solve.max_iters,
            harnack_radius: c.harnack_radius,
            pohozaev_radius: c.pohozaev_radius,
            fit_radius: c.fit_radius,
            min_concentration: c.min_concentration,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DegreeSection {
    pub t_star: f64,
    pub sweep: Vec<f64>,
    pub rule: ObstructionRule,
    pub options: DegreeOptions,
    /// Resolution of the product grid whose nodes are the sampled poles.
    pub sample_resolution: usize,
    pub sample_ts: Vec<f64>,
}

impl Default for DegreeSection {
    fn default() -> Self {
        Self {
            t_star: DEFAULT_T_STAR,
            sweep: DEFAULT_SWEEP.to_vec(),
            rule: ObstructionRule::default(),
            options: DegreeOptions::default(),
            sample_resolution: 6,
            sample_ts: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Only `constant` (`K ≡ 1`) is defined.
    pub suite: String,
    /// Bubble dilations checked for the Sobolev equality and orbit invariance.
    pub bubble_ts: Vec<f64>,
    /// `ε` of the Kazdan–Warner check against `1 + ε x_{n+1}`.
    pub kw_eps: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { suite: "constant".into(), bubble_ts: vec![2.0, 4.0], kw_eps: 0.1 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    #[serde(default)]
    pub curvature: CurvatureConfig,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(rename = "continue", default)]
    pub continuation: ContinueSection,
    #[serde(default)]
    pub flatness: ClassifyOptions,
    #[serde(default)]
    pub degree: DegreeSection,
    #[serde(default)]
    pub verify: VerifySection,
    /// Output directory; `--out` overrides it.
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for Problem {
    fn default() -> Self {
        Self { n: 2, sigma: 0.5, max_degree: 32, resolution: 32, grid: GridKind::Product }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
        if let Some(f) = &cfg.curvature.file {
            if f.is_relative() {
                cfg.curvature.file = Some(base_dir.join(f));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn params(&self) -> Result<ProblemParams, ConfigError> {
        ProblemParams::new(self.problem.n, self.problem.sigma).map_err(|e| ConfigError(format!("problem: {e}")))
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.params()?;
        if self.problem.resolution < 4 {
            return Err(ConfigError("problem.resolution must be at least 4".into()));
        }
        if let Some(f) = &self.curvature.file {
            if !f.exists() {
                return Err(ConfigError(format!("curvature file {} does not exist", f.display())));
            }
        }
        if self.curvature.file.is_some() && self.curvature.builtin.is_some() {
            return Err(ConfigError("curvature takes one of `builtin` and `file`, not both".into()));
        }
        if !(self.degree.t_star > 1.0) || self.degree.sweep.iter().any(|t| !(*t > 1.0)) {
            return Err(ConfigError("degree t values must exceed 1".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the configuration, output directory excluded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.output = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}
