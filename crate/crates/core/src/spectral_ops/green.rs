use crate::error::{Error, Result};
use crate::sphere_core::{chord_distance, ProblemParams, SpherePoint};

/// `G(p, q) = (1/(1 − cos d(p,q)))^{(n−2σ)/2}`.
///
/// `1 − cos d` is computed as `|p−q|²/2` to avoid cancellation for nearby points.
pub fn greens_value(p: &SpherePoint, q: &SpherePoint, params: &ProblemParams) -> Result<f64> {
    let c2 = chord_distance(p.coords(), q.coords()).powi(2);
    if c2 == 0.0 {
        return Err(Error::Singular("Green's function evaluated on the diagonal".into()));
    }
    Ok((2.0 / c2).powf(params.half_gap()))
}

/// Chordal Riesz kernel `|p−q|^{2σ−n}`; equals `2^{(2σ−n)/2} G(p, q)`.
pub fn riesz_kernel(p: &[f64], q: &[f64], params: &ProblemParams) -> f64 {
    chord_distance(p, q).powf(params.kernel_exponent())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_and_quarter_turn() {
        let p = ProblemParams::new(2, 0.5).unwrap();
        let n = SpherePoint::north(2);
        let s = SpherePoint::south(2);
        assert!((greens_value(&n, &s, &p).unwrap() - 2f64.powf(-0.5)).abs() < 1e-15);
        let e = SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!((greens_value(&n, &e, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!(greens_value(&n, &n, &p).is_err());
    }
}
