use std::sync::Arc;

use super::workspace::SpectralWorkspace;
use crate::error::{Error, Result};
use crate::sphere_core::{GridField, ProblemParams};

fn check_same_grid(a: &GridField, b: &GridField) -> Result<()> {
    if !Arc::ptr_eq(a.grid(), b.grid()) && a.len() != b.len() {
        return Err(Error::InvalidArgument("fields live on different grids".into()));
    }
    Ok(())
}

impl SpectralWorkspace {
    /// `E_K(v) = ⨍ v P_σ v / (⨍ K|v|^q)^{2/q}` with `q = 2n/(n−2σ)`.
    pub fn energy(&self, v: &[f64], k: &[f64]) -> Result<f64> {
        let q = self.params.sobolev_exponent();
        let den = self.mean_of(|i| k[i] * v[i].abs().powf(q));
        if !(den > 0.0) {
            return Err(Error::InvalidArgument(format!("energy denominator is not positive ({den})")));
        }
        Ok(self.quadratic_form(v) / den.powf(2.0 / q))
    }

    /// `⨍`-gradient of `E_K`: `(2/B^{2/q}) (P_σ v − (A/B) K|v|^{q−2}v)`.
    pub fn energy_gradient(&self, v: &[f64], k: &[f64]) -> Result<Vec<f64>> {
        let q = self.params.sobolev_exponent();
        let a = self.quadratic_form(v);
        let b = self.mean_of(|i| k[i] * v[i].abs().powf(q));
        if !(b > 0.0) {
            return Err(Error::InvalidArgument(format!("energy denominator is not positive ({b})")));
        }
        let pv = self.apply_p(v);
        let s = 2.0 / b.powf(2.0 / q);
        Ok(pv
            .iter()
            .zip(v)
            .zip(k)
            .map(|((p, vi), ki)| s * (p - (a / b) * ki * vi.abs().powf(q - 2.0) * vi))
            .collect())
    }
}

pub fn energy_ek(v: &GridField, k: &GridField, params: &ProblemParams) -> Result<f64> {
    check_same_grid(v, k)?;
    SpectralWorkspace::new(v.grid(), params)?.energy(v.values(), k.values())
}

pub fn energy_gradient(v: &GridField, k: &GridField, params: &ProblemParams) -> Result<GridField> {
    check_same_grid(v, k)?;
    let g = SpectralWorkspace::new(v.grid(), params)?.energy_gradient(v.values(), k.values())?;
    GridField::new(v.grid().clone(), g)
}

/// Both sides of `(⨍|v|^q)^{2/q} ≤ λ₀^{-1} ⨍ v P_σ v`.
pub fn beckner_check(v: &GridField, params: &ProblemParams) -> Result<(f64, f64)> {
    let ws = SpectralWorkspace::new(v.grid(), params)?;
    let q = params.sobolev_exponent();
    let lhs = v.abs_pow_mean(q).powf(2.0 / q);
    let rhs = ws.quadratic_form(v.values()) / params.c_intertwine;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_ops::real_harmonic;
    use crate::sphere_core::{bubble, build_grid, MoebiusParams, SpherePoint};

    #[test]
    fn constant_energy_is_lambda_zero() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 12).unwrap());
        let one = GridField::constant(&g, 1.0);
        assert!((energy_ek(&one, &one, &p).unwrap() - 0.5).abs() < 1e-13);
        let two = GridField::constant(&g, 2.0);
        assert!((energy_ek(&two, &one, &p).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn beckner_equality_on_bubble_and_gap_on_perturbation() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 48).unwrap());
        let m = MoebiusParams::new(SpherePoint::normalized(vec![0.2, -0.4, 0.7]).unwrap(), 3.0).unwrap();
        let (l, r) = beckner_check(&bubble(&g, &m, &p), &p).unwrap();
        assert!((l - r).abs() < 1e-10, "{l} {r}");
        let v = GridField::from_fn(&g, |x| 1.0 + 0.5 * real_harmonic(2, 1, x));
        let (l, r) = beckner_check(&v, &p).unwrap();
        assert!(r - l > 1e-3);
    }

    #[test]
    fn gradient_matches_central_difference() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let g = Arc::new(build_grid(2, 10).unwrap());
        let v = GridField::from_fn(&g, |x| 1.0 + 0.2 * x[0] + 0.1 * x[2] * x[1]);
        let k = GridField::from_fn(&g, |x| 1.0 + 0.1 * x[2]);
        let h = GridField::from_fn(&g, |x| x[1] * x[1] - 0.3 * x[0]);
        let ws = SpectralWorkspace::new(&g, &p).unwrap();
        let grad = ws.energy_gradient(v.values(), k.values()).unwrap();
        let exact = ws.mean_of(|i| grad[i] * h.values()[i]);
        let fd = |d: f64| {
            let plus = v.zip_map(&h, |a, b| a + d * b);
            let minus = v.zip_map(&h, |a, b| a - d * b);
            (ws.energy(plus.values(), k.values()).unwrap() - ws.energy(minus.values(), k.values()).unwrap()) / (2.0 * d)
        };
        let e1 = (fd(1e-2) - exact).abs();
        let e2 = (fd(5e-3) - exact).abs();
        assert!(e2 < e1 / 3.0, "δ-halving should cut the error by ~4: {e1} {e2}");
    }
}
