use super::chart::pole_frame;

/// A function on `S^n` given by its values at ambient unit vectors.
pub trait SphereFunction: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// Tangential gradient at `x`, expressed in ambient coordinates.
    ///
    /// Default: central differences along geodesics in the pole frame at `x`.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        fd_gradient(|p| self.value(p), x)
    }
}

const FD_STEP: f64 = 1e-5;

pub(crate) fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let frame = pole_frame(x);
    let (s, c) = FD_STEP.sin_cos();
    let mut grad = vec![0.0; x.len()];
    let mut p = vec![0.0; x.len()];
    for e in &frame {
        p.iter_mut().zip(x.iter().zip(e)).for_each(|(o, (a, b))| *o = c * a + s * b);
        let fp = f(&p);
        p.iter_mut().zip(x.iter().zip(e)).for_each(|(o, (a, b))| *o = c * a - s * b);
        let fm = f(&p);
        let d = (fp - fm) / (2.0 * FD_STEP);
        grad.iter_mut().zip(e).for_each(|(g, ek)| *g += d * ek);
    }
    grad
}

/// Removes the normal component: `g − (g·x)x`.
pub(crate) fn tangential(mut g: Vec<f64>, x: &[f64]) -> Vec<f64> {
    let gx: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
    g.iter_mut().zip(x).for_each(|(a, b)| *a -= gx * b);
    g
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant(pub f64);

impl SphereFunction for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
}

/// Wraps a closure; the gradient falls back to finite differences.
pub struct FnSphere<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Send + Sync> SphereFunction for FnSphere<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_gradient_of_height() {
        // ∇x₃ = e₃ − x₃ x
        let f = FnSphere(|x: &[f64]| x[2]);
        let x = [0.48, 0.6, 0.64];
        let g = f.gradient(&x);
        let want = tangential(vec![0.0, 0.0, 1.0], &x);
        for i in 0..3 {
            assert!((g[i] - want[i]).abs() < 1e-9);
        }
    }
}
