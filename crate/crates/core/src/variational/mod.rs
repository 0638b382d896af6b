//! The normalized energy `E_K`, the sharp Sobolev (Beckner) inequality, the constraint manifold
//! `𝒮₀ = {⨍|w|^q = 1, ⨍x|w|^q = 0}` near the constant 1, the local minimizer of `E_K` on it,
//! its Lagrange multipliers and the Kazdan–Warner defect.
//!
//! All averages are `⨍ = (1/ω_n)∫`. On zonal grids only the `x_{n+1}` moment is meaningful;
//! the other moments vanish by symmetry and are reported as zero.

mod constraint;
mod energy;
mod minimize;
mod multipliers;
mod workspace;

pub use constraint::{project_to_s0, ConstraintState};
pub use energy::{beckner_check, energy_ek, energy_gradient};
pub use minimize::{minimize_ek_near_1, tangent_hessian_spectrum, HessianCheck, MinimizeOptions, MinimizeResult};
pub use multipliers::{kazdan_warner_defect, kazdan_warner_defect_fn, lagrange_multipliers, MultiplierReport};
pub use workspace::SpectralWorkspace;
