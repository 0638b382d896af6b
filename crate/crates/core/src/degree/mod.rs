//! The obstruction field `p ↦ ∫K∘φ_{P,t}(x) x` on the unit ball, its Brouwer degree,
//! the index-counting formula, the homotopy `μK + (1−μ)` and the compactness certificate.

mod brouwer;
mod index;
mod obstruction;

pub use brouwer::{
    brouwer_degree, degree_sweep, sample_obstruction, DegreeMethod, DegreeOptions, DegreeReport, ObstructionSample,
    SweepRow, ZeroRecord, DEFAULT_SWEEP, DEFAULT_T_STAR,
};
pub use index::{
    compactness_certificate, homotopy_family, index_formula, nearest_zero_distance, CertificateBranch,
    CompactnessCertificate, ConstantField, IdentityField, PairKernel, SyntheticIndexField, KERNEL_TOL,
};
pub use obstruction::{eval_obstruction, BallField, ObstructionField, ObstructionRule};
