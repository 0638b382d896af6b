//! Flatness models at critical points, their weighted integrals over `R^n`, the set of
//! critical-order points with negative radial moment, and the interaction matrix `M`.

mod classify;
mod integrals;
mod matrix;
mod model;

pub use classify::{
    classify_kminus, default_shift_grid, hypothesis_margins, Classification, ClassifyFailure, ClassifyOptions,
    HypothesisMargins, KMinusEntry, HYPOTHESIS_FLAG,
};
pub use integrals::{
    canonical_moment, q_conformal_integral, q_gradient_integral, q_radial_integral, q_value_integral, Estimate,
    FlatnessQuadrature,
};
pub use matrix::{build_matrix_m, interaction_constant, kernel_positive_vector, pair_criterion, MatrixM, PairVerdict};
pub use model::{ConsistencyRow, CurvatureSpec, HomogeneousQ, LocalModel, ModelStructure};
