use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A unit vector in `R^{n+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Accepts coordinates whose norm is 1 within `1e-12`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "a sphere point needs at least 3 coordinates, got {}",
                coords.len()
            )));
        }
        let r = norm(&coords);
        if !r.is_finite() || (r - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("point is not on the unit sphere (|x| = {r})")));
        }
        Ok(Self { coords })
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        let r = norm(&coords);
        if !(r.is_finite() && r > 0.0) || coords.len() < 3 {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        coords.iter_mut().for_each(|c| *c /= r);
        Ok(Self { coords })
    }

    /// `e_{n+1}`.
    pub fn north(n: usize) -> Self {
        let mut coords = vec![0.0; n + 1];
        coords[n] = 1.0;
        Self { coords }
    }

    /// `−e_{n+1}`.
    pub fn south(n: usize) -> Self {
        let mut coords = vec![0.0; n + 1];
        coords[n] = -1.0;
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Sphere dimension `n`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn antipode(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        dot(&self.coords, &other.coords)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance in the ambient space.
pub fn chord_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Geodesic distance `d ∈ [0, π]`, computed as `2·atan2(|p−q|, |p+q|)`.
pub fn geodesic_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    geodesic_distance_raw(p.coords(), q.coords())
}

pub fn geodesic_distance_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in p.iter().zip(q) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}
