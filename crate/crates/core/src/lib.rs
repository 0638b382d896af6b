//! Numerical workbench for the prescribed fractional Q-curvature equation
//!
//! ```text
//! P_σ v = c(n,σ) K v^{(n+2σ)/(n−2σ)},   v > 0 on S^n
//! ```
//!
//! The crate is organised by subsystem:
//!
//! - [`sphere_core`]: points, charts, Möbius dilations, quadrature grids and grid fields.
//! - [`spectral_ops`]: eigenvalues of `P_σ`, harmonic transforms, the spherical Riesz potential.
//! - [`variational`]: the functional `E_K`, the constraint manifold near `1`, multipliers.
//! - [`solver`]: the fixed-point solver, subcritical continuation and blow-up diagnostics.
//! - [`flatness`]: local flatness models, weighted integrals, the interaction matrix.
//! - [`degree`]: the obstruction field on the ball and its Brouwer degree.

pub mod degree;
pub mod error;
pub mod flatness;
pub mod solver;
pub mod spectral_ops;
pub mod sphere_core;
pub mod variational;

pub use error::{Error, Result};
pub use sphere_core::{
    GridField, GridKind, MoebiusParams, ProblemParams, QuadratureGrid, SphereFunction, SpherePoint,
    StereoChart,
};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
