use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::sphere_core::ProblemParams;

const RECURRENCE_LIMIT: usize = 10_000;

/// `λ_k = Γ(k+n/2+σ)/Γ(k+n/2−σ)`.
///
/// Uses the ratio recurrence `λ_{k+1} = λ_k (k+n/2+σ)/(k+n/2−σ)` up to `k = 10⁴` and a
/// log-Gamma difference beyond.
pub fn eigenvalue(k: usize, params: &ProblemParams) -> f64 {
    let h = params.nf() / 2.0;
    let s = params.sigma;
    if k > RECURRENCE_LIMIT {
        let kf = k as f64;
        return (ln_gamma(kf + h + s) - ln_gamma(kf + h - s)).exp();
    }
    let mut lam = params.c_intertwine;
    for j in 0..k {
        let jf = j as f64;
        lam *= (jf + h + s) / (jf + h - s);
    }
    lam
}

/// Eigenvalues `λ_0..=λ_L` of `P_σ`.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorSpectrum {
    pub params: ProblemParams,
    pub max_degree: usize,
    pub eigenvalues: Vec<f64>,
}

impl OperatorSpectrum {
    pub fn new(params: &ProblemParams, max_degree: usize) -> Self {
        let h = params.nf() / 2.0;
        let s = params.sigma;
        let mut eigenvalues = Vec::with_capacity(max_degree + 1);
        let mut lam = params.c_intertwine;
        for k in 0..=max_degree {
            if k > RECURRENCE_LIMIT {
                lam = eigenvalue(k, params);
            }
            eigenvalues.push(lam);
            let kf = k as f64;
            lam *= (kf + h + s) / (kf + h - s);
        }
        Self { params: *params, max_degree, eigenvalues }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }
}
