//! One-dimensional Gauss rules used to build sphere grids and radial integrals.

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

/// Nodes (ascending) and weights of a one-dimensional rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affine map of `[-1, 1]` onto `[a, b]`; weights are multiplied by `(b−a)/2`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule1d {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        Rule1d {
            nodes: self.nodes.iter().map(|x| c + h * x).collect(),
            weights: self.weights.iter().map(|w| w * h).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Gauss–Legendre rule on `[-1, 1]`, exact up to degree `2n−1`.
pub fn gauss_legendre(n: usize) -> Rule1d {
    let n = NonZeroUsize::new(n.max(1)).unwrap();
    let rule = GaussLegendre::new(n);
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss–Jacobi rule for the weight `(1−x)^α (1+x)^β` on `[-1, 1]`, via Golub–Welsch.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Rule1d {
    assert!(alpha > -1.0 && beta > -1.0, "Jacobi exponents must exceed -1");
    let n = n.max(1);
    let ab = alpha + beta;
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        j[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let b2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + alpha) * (m + beta) * (m + ab)
                    / ((2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0))
            };
            j[(k, k + 1)] = b2.sqrt();
            j[(k + 1, k)] = b2.sqrt();
        }
    }
    let mu0 = ((ab + 1.0) * 2f64.ln() + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0) - ln_gamma(ab + 2.0)).exp();
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss rule for the weight `√(1−x²)` (Chebyshev of the second kind), exact up to degree `2n−1`.
pub fn gauss_chebyshev_u(n: usize) -> Rule1d {
    let n = n.max(1);
    let h = PI / (n as f64 + 1.0);
    let mut pairs: Vec<(f64, f64)> = (1..=n)
        .map(|k| {
            let th = k as f64 * h;
            (th.cos(), h * th.sin().powi(2))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}
