//! The intertwining operator `P_σ` on `S^n`, its inverse, the spherical Riesz potential
//! and the Green's function.
//!
//! `P_σ` acts on degree-`k` harmonics by `λ_k = Γ(k+n/2+σ)/Γ(k+n/2−σ)`. Its inverse is
//! realized twice: by spectral division and by a singular Riesz quadrature on the grid.

mod basis;
mod eigen;
mod green;
mod riesz;
mod transform;

pub use basis::{
    gegenbauer_one, harmonic_index, legendre, normalized_associated_legendre, real_harmonic, zonal_harmonic,
    HarmonicBasis,
};
pub use eigen::{eigenvalue, OperatorSpectrum};
pub use green::{greens_value, riesz_kernel};
pub use riesz::{riesz_potential, RieszOperator};
pub use transform::{
    analyze, apply_psigma, invert_psigma, is_zonal_data, pushforward_field, synthesize, SpectralField, SphericalTransform,
};
