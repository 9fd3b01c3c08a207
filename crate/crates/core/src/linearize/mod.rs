//! Koenigs functions, Abel residuals, linearization coefficients and centralizer relations.

mod koenigs;
mod relations;
mod slc;

pub use koenigs::{abel_residual, koenigs_bp, require_zero_step, KoenigsApprox, KoenigsScheme, ResidualStats};
pub use relations::{check_koenigs_ratio, check_power_relation, commute_residual, commute_residual_at, COMMUTE_TOL};
pub use slc::{
    ratio_limit_check, ratio_limit_check_with, slc_estimate, slc_estimate_with, MethodEstimate, MethodStatus,
    RatioLimit, SLCResult, SlcMethod, SlcOptions,
};
