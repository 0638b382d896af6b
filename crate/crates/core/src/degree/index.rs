use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

use super::obstruction::BallField;
use crate::error::{Error, Result};
use crate::flatness::{
    build_matrix_m, classify_kminus, kernel_positive_vector, pair_criterion, ClassifyOptions, CurvatureSpec,
    KMinusEntry, LocalModel, MatrixM, PairVerdict,
};
use crate::sphere_core::{norm, ProblemParams, SphereFunction};

/// `V(p) = p` on the ball of radius `r` in `R^d`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityField {
    pub dim: usize,
    pub radius: f64,
}

impl IdentityField {
    pub fn new(dim: usize, radius: f64) -> Self {
        Self { dim, radius }
    }
}

impl BallField for IdentityField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn radius(&self) -> f64 {
        self.radius
    }
    fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(p.to_vec())
    }
}

#[derive(Clone, Debug)]
pub struct ConstantField {
    pub value: Vec<f64>,
    pub radius: f64,
}

impl ConstantField {
    pub fn new(value: Vec<f64>, radius: f64) -> Self {
        Self { value, radius }
    }
}

impl BallField for ConstantField {
    fn dim(&self) -> usize {
        self.value.len()
    }
    fn radius(&self) -> f64 {
        self.radius
    }
    fn eval(&self, _p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value.clone())
    }
}

fn check_canonical(index: usize, m: &LocalModel) -> Result<(f64, usize)> {
    let a = m
        .q
        .coefficients()
        .ok_or_else(|| Error::InvalidArgument(format!("critical point {index} has a non-canonical model")))?;
    if a.iter().any(|x| *x == 0.0) {
        return Err(Error::InvalidArgument(format!("critical point {index} has a zero coefficient")));
    }
    let sum: f64 = a.iter().sum();
    if sum == 0.0 {
        return Err(Error::InvalidArgument(format!("coefficients of critical point {index} sum to zero")));
    }
    Ok((sum, a.iter().filter(|x| **x < 0.0).count()))
}

/// `−1 + (−1)^n Σ (−1)^{i(q₀)}` over critical points with `Σa_j(q₀) < 0`, where `i(q₀)` counts
/// negative coefficients.
pub fn index_formula(spec: &CurvatureSpec) -> Result<i64> {
    let parity = |k: usize| if k % 2 == 0 { 1 } else { -1 };
    let mut sum = 0;
    for (index, m) in spec.critical_points.iter().enumerate() {
        let (s, neg) = check_canonical(index, m)?;
        if s < 0.0 {
            sum += parity(neg);
        }
    }
    Ok(-1 + parity(spec.n) * sum)
}

/// A field on `B³` whose regular zeros carry the local indices counted by [`index_formula`].
///
/// `V = (Re g(w), Im g(w), p₃)` with `w = p₁ + i p₂` and `g` a product of factors `(w − w_k)`
/// (index +1) or `conj(w − w_k)` (index −1). The zero at the origin has index −1; the critical
/// points with `Σa < 0` sit at `w_k = 0.5 e^{2πik/m}` with index `(−1)^{n+i(q₀)}`.
#[derive(Clone, Debug)]
pub struct SyntheticIndexField {
    pub zeros: Vec<(Complex64, i32)>,
    pub radius: f64,
}

impl SyntheticIndexField {
    pub fn from_spec(spec: &CurvatureSpec) -> Result<Self> {
        if spec.n != 2 {
            return Err(Error::UnsupportedDimension(spec.n));
        }
        let mut signs = Vec::new();
        for (index, m) in spec.critical_points.iter().enumerate() {
            let (s, neg) = check_canonical(index, m)?;
            if s < 0.0 {
                signs.push(if (spec.n + neg) % 2 == 0 { 1 } else { -1 });
            }
        }
        let k = signs.len();
        let mut zeros = vec![(Complex64::new(0.0, 0.0), -1)];
        zeros.extend(
            signs
                .into_iter()
                .enumerate()
                .map(|(j, s)| (Complex64::from_polar(0.5, 2.0 * PI * j as f64 / k as f64), s)),
        );
        Ok(Self { zeros, radius: 0.9 })
    }

    /// Sum of the prescribed local indices.
    pub fn expected_degree(&self) -> i64 {
        self.zeros.iter().map(|z| z.1 as i64).sum()
    }
}

impl BallField for SyntheticIndexField {
    fn dim(&self) -> usize {
        3
    }
    fn radius(&self) -> f64 {
        self.radius
    }
    fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        let w = Complex64::new(p[0], p[1]);
        let g = self
            .zeros
            .iter()
            .map(|(z, s)| if *s > 0 { w - z } else { (w - z).conj() })
            .product::<Complex64>();
        Ok(vec![g.re, g.im, p[2]])
    }
}

struct Blend {
    base: Arc<dyn SphereFunction>,
    mu: f64,
}

impl SphereFunction for Blend {
    fn value(&self, x: &[f64]) -> f64 {
        self.mu * self.base.value(x) + (1.0 - self.mu)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.base.gradient(x).into_iter().map(|g| self.mu * g).collect()
    }
}

/// `K_μ = μK + (1−μ)`, with local models scaled by `μ` (dropped at `μ = 0`).
pub fn homotopy_family(spec: &CurvatureSpec, mu: f64) -> Result<CurvatureSpec> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidArgument(format!("homotopy parameter {mu} outside [0, 1]")));
    }
    let models = if mu == 0.0 {
        Vec::new()
    } else {
        spec.critical_points
            .iter()
            .map(|m| LocalModel::new(m.q0.clone(), m.q.scaled(mu), m.remainder_order))
            .collect::<Result<_>>()?
    };
    let mut out = CurvatureSpec::new(
        spec.n,
        format!("{} (mu = {mu})", spec.name),
        Arc::new(Blend { base: spec.global.clone(), mu }),
        models,
    )?;
    out.consistency_radius = spec.consistency_radius;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateBranch {
    /// At most one critical-order point with negative radial moment.
    AtMostOneMember,
    /// Every pair satisfies `M_ii M_jj < M_ij²`.
    PairCriterion,
    Neither,
}

/// A pair failing the pair criterion, with a positive kernel vector of its 2×2 block if any.
#[derive(Clone, Debug, Serialize)]
pub struct PairKernel {
    pub i: usize,
    pub j: usize,
    pub kernel: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessCertificate {
    pub branch: CertificateBranch,
    pub members: Vec<KMinusEntry>,
    pub matrix: Option<MatrixM>,
    pub pairs: Vec<PairVerdict>,
    pub failing_pairs: Vec<PairKernel>,
}

/// Relative eigenvalue threshold for kernels of 2×2 blocks.
pub const KERNEL_TOL: f64 = 1e-8;

/// Which of the two compactness hypotheses holds for `spec`.
pub fn compactness_certificate(
    spec: &CurvatureSpec,
    params: &ProblemParams,
    opts: &ClassifyOptions,
) -> Result<CompactnessCertificate> {
    let c = classify_kminus(spec, params, opts)?;
    if let Some(f) = c.failures.first() {
        return Err(Error::Classification(format!("critical point {}: {}", f.index, f.reason)));
    }
    let members = c.members();
    if members.len() <= 1 {
        return Ok(CompactnessCertificate {
            branch: CertificateBranch::AtMostOneMember,
            members,
            matrix: None,
            pairs: Vec::new(),
            failing_pairs: Vec::new(),
        });
    }
    let m = build_matrix_m(spec, &members, params)?;
    let pairs = pair_criterion(&m);
    let failing_pairs: Vec<PairKernel> = pairs
        .iter()
        .filter(|v| !v.holds)
        .map(|v| {
            let e = &m.entries;
            let block = vec![vec![e[v.i][v.i], e[v.i][v.j]], vec![e[v.j][v.i], e[v.j][v.j]]];
            let kernel = MatrixM::from_entries(block).ok().and_then(|b| kernel_positive_vector(&b, KERNEL_TOL));
            PairKernel { i: v.i, j: v.j, kernel }
        })
        .collect();
    let branch = if failing_pairs.is_empty() { CertificateBranch::PairCriterion } else { CertificateBranch::Neither };
    Ok(CompactnessCertificate { branch, members, matrix: Some(m), pairs, failing_pairs })
}

/// Distance from `p` to the nearest prescribed zero of a synthetic field.
pub fn nearest_zero_distance(field: &SyntheticIndexField, p: &[f64]) -> f64 {
    field
        .zeros
        .iter()
        .map(|(z, _)| norm(&[p[0] - z.re, p[1] - z.im, p[2]]))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::{brouwer_degree, eval_obstruction, DegreeOptions, ObstructionRule};
    use crate::sphere_core::{Constant, SpherePoint};

    fn morse_spec(models: Vec<(SpherePoint, Vec<f64>)>) -> CurvatureSpec {
        let ms = models.into_iter().map(|(p, a)| LocalModel::canonical(p, a, 2.0).unwrap()).collect();
        CurvatureSpec::new(2, "morse", Arc::new(Constant(1.0)), ms).unwrap()
    }

    fn four_points() -> CurvatureSpec {
        morse_spec(vec![
            (SpherePoint::north(2), vec![-1.0, -1.0]),
            (SpherePoint::south(2), vec![1.0, 1.0]),
            (SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap(), vec![-2.0, 1.0]),
            (SpherePoint::new(vec![-1.0, 0.0, 0.0]).unwrap(), vec![-2.0, 1.0]),
        ])
    }

    #[test]
    fn index_formula_examples() {
        let two = morse_spec(vec![
            (SpherePoint::north(2), vec![-1.0, -1.0]),
            (SpherePoint::south(2), vec![1.0, 1.0]),
        ]);
        assert_eq!(index_formula(&two).unwrap(), 0);
        assert_eq!(index_formula(&four_points()).unwrap(), -2);
        assert_eq!(index_formula(&morse_spec(vec![(SpherePoint::north(2), vec![1.0, 2.0])])).unwrap(), -1);
        assert!(index_formula(&morse_spec(vec![(SpherePoint::north(2), vec![0.0, 2.0])])).is_err());
        assert!(index_formula(&morse_spec(vec![(SpherePoint::north(2), vec![-2.0, 2.0])])).is_err());
    }

    #[test]
    fn synthetic_fields_match_index_formula() {
        let two = morse_spec(vec![
            (SpherePoint::north(2), vec![-1.0, -1.0]),
            (SpherePoint::south(2), vec![1.0, 1.0]),
        ]);
        for spec in [two, four_points()] {
            let f = SyntheticIndexField::from_spec(&spec).unwrap();
            let rep = brouwer_degree(&f, &DegreeOptions::default()).unwrap();
            assert_eq!(rep.degree, index_formula(&spec).unwrap());
            assert_eq!(rep.kronecker, Some(rep.degree));
            assert_eq!(rep.zeros.len(), f.zeros.len());
            assert!(rep.zeros.iter().all(|z| nearest_zero_distance(&f, &z.p) < 1e-8));
        }
    }

    #[test]
    fn homotopy_endpoints_and_linearity() {
        let spec = CurvatureSpec::linear_x(2, 0.1).unwrap();
        let x = [0.36, 0.48, 0.8];
        let k0 = homotopy_family(&spec, 0.0).unwrap();
        assert_eq!(k0.value(&x), 1.0);
        assert!(k0.critical_points.is_empty());
        let k1 = homotopy_family(&spec, 1.0).unwrap();
        assert_eq!(k1.value(&x), spec.value(&x));
        assert!(homotopy_family(&spec, 1.5).is_err());
        let pole = SpherePoint::normalized(vec![0.2, -0.5, 0.3]).unwrap();
        let rule = ObstructionRule::default();
        let v1 = eval_obstruction(&spec, &pole, 6.0, &rule).unwrap();
        for mu in [0.25, 0.7] {
            let v = eval_obstruction(&homotopy_family(&spec, mu).unwrap(), &pole, 6.0, &rule).unwrap();
            for i in 0..3 {
                assert!((v[i] - mu * v1[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn certificate_without_critical_order_points() {
        let params = ProblemParams::new(2, 0.5).unwrap();
        let spec = CurvatureSpec::constant(2, 1.0).unwrap();
        let c = compactness_certificate(&spec, &params, &ClassifyOptions::default()).unwrap();
        assert_eq!(c.branch, CertificateBranch::AtMostOneMember);
    }

    #[test]
    fn certificate_branches_for_two_members() {
        // β = n − 2σ = 1 for σ = 1/2 on S²
        let params = ProblemParams::new(2, 0.5).unwrap();
        let spec = |a: Vec<f64>| {
            let ms = [SpherePoint::north(2), SpherePoint::south(2)]
                .into_iter()
                .map(|p| LocalModel::canonical(p, a.clone(), 1.0).unwrap())
                .collect();
            CurvatureSpec::new(2, "pair", Arc::new(Constant(1.0)), ms).unwrap()
        };
        let opts = ClassifyOptions::default();
        let small = compactness_certificate(&spec(vec![-0.025, -0.025]), &params, &opts).unwrap();
        assert_eq!(small.branch, CertificateBranch::PairCriterion);
        let large = compactness_certificate(&spec(vec![-1.0, -1.0]), &params, &opts).unwrap();
        assert_eq!(large.branch, CertificateBranch::Neither);
        assert_eq!(large.failing_pairs.len(), 1);
        assert!(large.failing_pairs[0].kernel.is_none());
    }
}
