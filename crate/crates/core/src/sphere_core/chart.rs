use super::params::ProblemParams;
use super::point::{dot, SpherePoint};

/// Orthonormal basis of the tangent space at `pole`.
///
/// Gram–Schmidt on the standard basis with the coordinate vector of largest `|pole_k|`
/// dropped (ties go to the lowest index).
pub fn pole_frame(pole: &[f64]) -> Vec<Vec<f64>> {
    let d = pole.len();
    let mut drop = 0;
    for k in 1..d {
        if pole[k].abs() > pole[drop].abs() {
            drop = k;
        }
    }
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for k in (0..d).filter(|&k| k != drop) {
        let mut v: Vec<f64> = pole.iter().map(|p| -p * pole[k]).collect();
        v[k] += 1.0;
        for f in &frame {
            let proj = dot(&v, f);
            v.iter_mut().zip(f).for_each(|(a, b)| *a -= proj * b);
        }
        let r = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|a| *a /= r);
        frame.push(v);
    }
    frame
}

/// Stereographic projection from a pole `N`, with an explicit tangent frame.
///
/// `F(x) = (2/(1+|x|²)) Σ x_i e_i + ((|x|²−1)/(1+|x|²)) N`, so `F(0) = −N` is the chart center.
#[derive(Clone, Debug, PartialEq)]
pub struct StereoChart {
    north: Vec<f64>,
    frame: Vec<Vec<f64>>,
}

impl StereoChart {
    pub fn with_north(pole: &SpherePoint) -> Self {
        let north = pole.coords().to_vec();
        let frame = pole_frame(&north);
        Self { north, frame }
    }

    /// The chart whose origin maps to `center`.
    pub fn centered_at(center: &SpherePoint) -> Self {
        Self::with_north(&center.antipode())
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn north(&self) -> &[f64] {
        &self.north
    }

    pub fn center(&self) -> Vec<f64> {
        self.north.iter().map(|c| -c).collect()
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        let r2: f64 = x.iter().map(|a| a * a).sum();
        let a = 2.0 / (1.0 + r2);
        let b = (r2 - 1.0) / (1.0 + r2);
        for (o, nk) in out.iter_mut().zip(&self.north) {
            *o = b * nk;
        }
        for (xi, e) in x.iter().zip(&self.frame) {
            let c = a * xi;
            out.iter_mut().zip(e).for_each(|(o, ek)| *o += c * ek);
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.north.len()];
        self.forward_into(x, &mut out);
        out
    }

    /// `None` at the pole itself.
    pub fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        let den = 1.0 - dot(q, &self.north);
        if den <= 1e-300 {
            return None;
        }
        Some(self.frame.iter().map(|e| dot(q, e) / den).collect())
    }
}

pub fn stereo_forward(x: &[f64], pole: &SpherePoint) -> SpherePoint {
    let q = StereoChart::with_north(pole).forward(x);
    SpherePoint::normalized(q).expect("image of the chart lies on the sphere")
}

pub fn stereo_inverse(q: &SpherePoint, pole: &SpherePoint) -> Option<Vec<f64>> {
    StereoChart::with_north(pole).inverse(q.coords())
}

/// Volume Jacobian `(2/(1+|x|²))^n` of `F`, with `n = x.len()`.
pub fn stereo_jacobian(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|a| a * a).sum();
    (2.0 / (1.0 + r2)).powi(x.len() as i32)
}

/// `H(x) = (2/(1+|x|²))^{(n−2σ)/2}`, the weight relating sphere and flat solutions.
pub fn conformal_factor(x: &[f64], params: &ProblemParams) -> f64 {
    let r2: f64 = x.iter().map(|a| a * a).sum();
    (2.0 / (1.0 + r2)).powf(params.half_gap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_core::point::chord_distance;

    fn pt(v: &[f64]) -> SpherePoint {
        SpherePoint::normalized(v.to_vec()).unwrap()
    }

    #[test]
    fn frame_is_orthonormal_and_tangent() {
        for p in [pt(&[0.0, 0.0, 1.0]), pt(&[0.3, -0.2, 0.5, 0.7]), pt(&[1.0, 1.0, 0.0])] {
            let f = pole_frame(p.coords());
            assert_eq!(f.len(), p.dim());
            for (i, a) in f.iter().enumerate() {
                assert!(dot(a, p.coords()).abs() < 1e-14);
                for (j, b) in f.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(a, b) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn north_pole_frame_is_standard() {
        let f = pole_frame(&[0.0, 0.0, 1.0]);
        assert_eq!(f, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
    }

    #[test]
    fn origin_maps_to_center_and_roundtrips() {
        let c = pt(&[0.1, 0.4, -0.3]);
        let ch = StereoChart::centered_at(&c);
        let q = ch.forward(&[0.0, 0.0]);
        assert!(chord_distance(&q, c.coords()) < 1e-15);
        let x = [0.7, -1.3];
        let back = ch.inverse(&ch.forward(&x)).unwrap();
        assert!((back[0] - x[0]).abs() < 1e-13 && (back[1] - x[1]).abs() < 1e-13);
    }

    #[test]
    fn chord_identity() {
        let ch = StereoChart::with_north(&pt(&[0.2, 0.1, -0.4, 0.9]));
        let x = [0.3, -0.8, 1.1];
        let y = [-2.0, 0.5, 0.1];
        let lhs = chord_distance(&ch.forward(&x), &ch.forward(&y)).powi(2);
        let dx: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let rhs = dx * (2.0 / (1.0 + dot(&x, &x))) * (2.0 / (1.0 + dot(&y, &y)));
        assert!((lhs - rhs).abs() < 1e-13);
    }
}
