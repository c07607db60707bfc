//! Decay-rate analysis of survival curves: fits, explicit bounds and
//! verdicts on the three tail regimes.

mod bounds;
mod curve;
mod fit;
mod verify;

pub use bounds::{
    dominance_check, estm_rhs, max_product_by_enumeration, stnexp_rhs, BoundValue, DominanceReport,
    MaxProductSource, MaxProductTable, Violation, DEFAULT_DELTA,
};
pub use curve::{wilson, Provenance, SurvivalCurve};
pub use fit::{default_theta_grid, fit_rate, fit_rate_with_grid, FitFamily, FitParams, RateFit};
pub use verify::{scaled_tail, verify_theorem_bound, Claim, ScaledTail, TheoremVerdict, BOUNDED_SLOPE, MIN_HORIZON};
