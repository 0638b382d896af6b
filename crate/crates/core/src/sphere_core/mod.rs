//! Geometry of the round sphere `S^n ⊂ R^{n+1}`.
//!
//! Points, distances, stereographic charts with explicit frames, the Möbius dilations
//! `φ_{P,t}`, product and zonal quadrature grids, grid fields and their columnar text format.

mod chart;
mod function;
mod grid;
mod io;
mod moebius;
mod params;
mod point;
pub mod quadrature;

pub use chart::{conformal_factor, pole_frame, stereo_forward, stereo_inverse, stereo_jacobian, StereoChart};
pub use function::{Constant, FnSphere, SphereFunction};
pub(crate) use function::tangential;
pub use grid::{build_grid, GridField, GridKind, QuadratureGrid};
pub use io::{read_field, write_field, write_grid};
pub use params::sphere_area;
pub use moebius::{bubble, conformal_pushforward, moebius_apply, MoebiusParams};
pub use params::ProblemParams;
pub use point::{chord_distance, dot, geodesic_distance, geodesic_distance_raw, norm, SpherePoint};
