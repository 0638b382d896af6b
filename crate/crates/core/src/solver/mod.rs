//! Fixed-point solution of the integral equation, subcritical continuation, and
//! blow-up diagnostics (profile, Harnack, Pohozaev, pair limit).

mod chart_view;
mod continuation;
mod diagnostics;
mod fixed_point;
mod pohozaev;

pub use chart_view::{ChartView, Directions};
pub use diagnostics::{
    fit_pair_data, harnack_ratio, moments, pair_profile, profile_error, profile_error_with, refine_max,
    wbar_critical_points, ProfileOptions, ProfileReport,
};
pub use fixed_point::{solve, InverseRoute, Normalization, SolveOptions, SolveReport, Solver};
pub use pohozaev::{pohozaev_residual, pohozaev_terms, PohozaevTerms, MAX_BALL_RADIUS};
pub use continuation::{
    continuation_blowup, default_probe_radii, moment_table, pair_limit_fit, pair_limit_fit_with, pair_limit_prediction,
    BlowupTrace, ContinuationOptions, MomentRow, MomentTable, TraceFailure, TraceRecord, DEFAULT_MIN_CONCENTRATION,
};
