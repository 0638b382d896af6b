use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use super::classify::KMinusEntry;
use super::model::CurvatureSpec;
use crate::error::{Error, Result};
use crate::spectral_ops::greens_value;
use crate::sphere_core::{ProblemParams, SpherePoint};

/// Symmetric interaction matrix of candidate blow-up points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixM {
    pub points: Vec<SpherePoint>,
    pub etas: Vec<Vec<f64>>,
    pub entries: Vec<Vec<f64>>,
}

impl MatrixM {
    /// A matrix given by its entries only; must be square and symmetric within `1e−12`.
    pub fn from_entries(entries: Vec<Vec<f64>>) -> Result<Self> {
        let k = entries.len();
        if entries.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("interaction matrix must be square".into()));
        }
        for i in 0..k {
            for j in 0..i {
                if (entries[i][j] - entries[j][i]).abs() > 1e-12 * (1.0 + entries[i][j].abs()) {
                    return Err(Error::InvalidArgument(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(Self { points: Vec::new(), etas: Vec::new(), entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let k = self.size();
        DMatrix::from_fn(k, k, |i, j| self.entries[i][j])
    }
}

/// `2^{(n−2σ)/2} (n−2σ)²/(4n) · π^{n/2}/Γ(σ+n/2)`, the off-diagonal prefactor.
pub fn interaction_constant(params: &ProblemParams) -> f64 {
    let nf = params.nf();
    let gap = nf - 2.0 * params.sigma;
    2f64.powf(gap / 2.0) * gap * gap / (4.0 * nf) * PI.powf(nf / 2.0) / gamma(params.sigma + nf / 2.0)
}

/// `M_jj = −K(q_j)^{−(1+σ)/σ} · radial_j` and
/// `M_ij = −interaction_constant · G(q_i, q_j)/√(K(q_i)K(q_j))`.
pub fn build_matrix_m(spec: &CurvatureSpec, members: &[KMinusEntry], params: &ProblemParams) -> Result<MatrixM> {
    let k = members.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("the interaction matrix needs at least 2 members, got {k}")));
    }
    let kv: Vec<f64> = members.iter().map(|m| spec.value(m.q0.coords())).collect();
    if let Some(v) = kv.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Negativity(format!("K = {v} at a member point")));
    }
    let c = interaction_constant(params);
    let power = -(1.0 + params.sigma) / params.sigma;
    let mut entries = vec![vec![0.0; k]; k];
    for i in 0..k {
        entries[i][i] = -kv[i].powf(power) * members[i].radial_value;
        for j in 0..i {
            let g = greens_value(&members[i].q0, &members[j].q0, params)
                .map_err(|_| Error::Singular(format!("members {i} and {j} coincide")))?;
            let v = -c * g / (kv[i] * kv[j]).sqrt();
            entries[i][j] = v;
            entries[j][i] = v;
        }
    }
    Ok(MatrixM {
        points: members.iter().map(|m| m.q0.clone()).collect(),
        etas: members.iter().map(|m| m.eta.clone()).collect(),
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    /// `M_ii M_jj < M_ij²` (strict).
    pub holds: bool,
}

pub fn pair_criterion(m: &MatrixM) -> Vec<PairVerdict> {
    let e = &m.entries;
    let mut out = Vec::new();
    for i in 0..m.size() {
        for j in i + 1..m.size() {
            out.push(PairVerdict { i, j, holds: e[i][i] * e[j][j] < e[i][j] * e[i][j] });
        }
    }
    out
}

/// A unit vector `λ > 0` with `Mλ = 0`, if the numerical kernel contains one.
///
/// Eigenvalues with `|μ| ≤ tol·max(1, max|μ|)` span the kernel. Nullity 1 is sign-normalized;
/// larger kernels solve `max s` subject to `Bc ≥ s`, `|c_i| ≤ 1` as a linear program.
pub fn kernel_positive_vector(m: &MatrixM, tol: f64) -> Option<Vec<f64>> {
    let k = m.size();
    if k == 0 {
        return None;
    }
    let eig = SymmetricEigen::new(m.to_dmatrix());
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let basis: Vec<Vec<f64>> = (0..k)
        .filter(|&i| eig.eigenvalues[i].abs() <= tol * scale)
        .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let positive = |v: Vec<f64>| -> Option<Vec<f64>> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
        (v.iter().all(|x| *x > tol)).then_some(v)
    };
    match basis.len() {
        0 => None,
        1 => {
            let v = &basis[0];
            let s = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            positive(v.iter().map(|x| s * x).collect())
        }
        d => {
            let mut lp = Problem::new(OptimizationDirection::Maximize);
            let cs: Vec<_> = (0..d).map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
            let s = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
            for i in 0..k {
                let mut row: Vec<_> = cs.iter().enumerate().map(|(b, &c)| (c, basis[b][i])).collect();
                row.push((s, -1.0));
                lp.add_constraint(&row[..], ComparisonOp::Ge, 0.0);
            }
            let sol = lp.solve().ok()?.into_solution().ok()?;
            if sol.objective() <= tol {
                return None;
            }
            let v = (0..k).map(|i| (0..d).map(|b| sol.var_value(cs[b]) * basis[b][i]).sum()).collect();
            positive(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(e: Vec<Vec<f64>>) -> MatrixM {
        MatrixM::from_entries(e).unwrap()
    }

    #[test]
    fn pair_criterion_examples() {
        assert!(pair_criterion(&m(vec![vec![1.0, -2.0], vec![-2.0, 1.0]]))[0].holds);
        assert!(!pair_criterion(&m(vec![vec![3.0, -1.0], vec![-1.0, 3.0]]))[0].holds);
        assert!(!pair_criterion(&m(vec![vec![2.0, -2.0], vec![-2.0, 2.0]]))[0].holds);
    }

    #[test]
    fn kernel_examples() {
        let v = kernel_positive_vector(&m(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]), 1e-10).unwrap();
        let r = 0.5f64.sqrt();
        assert!((v[0] - r).abs() < 1e-12 && (v[1] - r).abs() < 1e-12);
        assert!(kernel_positive_vector(&m(vec![vec![2.0, -1.0], vec![-1.0, 2.0]]), 1e-10).is_none());
        // mixed-sign kernel
        assert!(kernel_positive_vector(&m(vec![vec![1.0, 1.0], vec![1.0, 1.0]]), 1e-10).is_none());
    }

    #[test]
    fn higher_nullity_uses_feasibility() {
        assert!(kernel_positive_vector(&m(vec![vec![0.0; 3]; 3]), 1e-10).is_some());
        // kernel spanned by e1 − e2 and e3: no strictly positive member
        let e = vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]];
        assert!(kernel_positive_vector(&m(e), 1e-10).is_none());
    }

    #[test]
    fn asymmetric_entries_are_rejected() {
        assert!(MatrixM::from_entries(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
    }
}
