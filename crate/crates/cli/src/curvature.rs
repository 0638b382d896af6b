//! Curvature specs from the builtin library or from a field file.

use std::io::BufReader;
use std::sync::Arc;

use fracq_core::flatness::{CurvatureSpec, LocalModel};
use fracq_core::spectral_ops::{analyze, SpectralField};
use fracq_core::sphere_core::read_field;
use fracq_core::{SphereFunction, SpherePoint};

use crate::config::{ConfigError, CurvatureConfig, ModelConfig};

pub const BUILTINS: [&str; 4] = ["constant", "linear-x", "quadratic-poly", "flatness-demo"];

/// Spectral interpolant of a sampled field.
struct Interpolated(SpectralField);

impl SphereFunction for Interpolated {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.evaluate(x)
    }
}

fn need<T: Clone>(v: &Option<T>, key: &str, builtin: &str) -> Result<T, ConfigError> {
    v.clone().ok_or_else(|| ConfigError(format!("curvature `{builtin}` needs `{key}`")))
}

fn point(q: &[f64], n: usize) -> Result<SpherePoint, ConfigError> {
    if q.len() != n + 1 {
        return Err(ConfigError(format!("point {q:?} does not have {} coordinates", n + 1)));
    }
    SpherePoint::normalized(q.to_vec()).map_err(|e| ConfigError(format!("point {q:?}: {e}")))
}

fn models(list: &[ModelConfig], n: usize) -> Result<Vec<LocalModel>, ConfigError> {
    list.iter()
        .map(|m| {
            let q = point(&m.q, n)?;
            let mut model = LocalModel::canonical(q, m.a.clone(), m.beta)
                .map_err(|e| ConfigError(format!("model at {:?}: {e}", m.q)))?;
            model.remainder_order = m.remainder_order;
            Ok(model)
        })
        .collect()
}

pub fn build_spec(cfg: &CurvatureConfig, n: usize) -> Result<CurvatureSpec, ConfigError> {
    let bad = |e: fracq_core::Error| ConfigError(format!("curvature: {e}"));
    let spec = if let Some(path) = &cfg.file {
        let f = std::fs::File::open(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let field = read_field(BufReader::new(f)).map_err(bad)?;
        if field.grid().n() != n {
            return Err(ConfigError(format!("curvature file is on S^{}, problem is on S^{n}", field.grid().n())));
        }
        let interp = analyze(&field).map_err(bad)?;
        CurvatureSpec::new(n, path.display().to_string(), Arc::new(Interpolated(interp)), Vec::new()).map_err(bad)?
    } else {
        let name = cfg.builtin.as_deref().unwrap_or("constant");
        match name {
            "constant" => CurvatureSpec::constant(n, cfg.value.unwrap_or(1.0)).map_err(bad)?,
            "linear-x" => CurvatureSpec::linear_x(n, need(&cfg.eps, "eps", name)?).map_err(bad)?,
            "quadratic-poly" => CurvatureSpec::quadratic_poly(
                n,
                need(&cfg.c, "c", name)?,
                cfg.b.clone().unwrap_or_else(|| vec![0.0; n + 1]),
                need(&cfg.a, "a", name)?,
            )
            .map_err(bad)?,
            "flatness-demo" => {
                let pts = need(&cfg.points, "points", name)?
                    .iter()
                    .map(|m| Ok((point(&m.q, n)?, m.a.clone(), m.beta)))
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                CurvatureSpec::flatness_demo(n, need(&cfg.base, "base", name)?, need(&cfg.rho, "rho", name)?, pts)
                    .map_err(bad)?
            }
            other => {
                return Err(ConfigError(format!("unknown builtin `{other}` (expected one of {})", BUILTINS.join(", "))))
            }
        }
    };
    match &cfg.models {
        Some(list) => spec.with_models(models(list, n)?).map_err(bad),
        None => Ok(spec),
    }
}
