//! Numerical checks of the exponential-moment calculus behind fast rates:
//! normalized cumulant generating functions, the Bernstein-to-central
//! conversion, the variance adjustment used by second-order learners, ESI
//! properties, and the closed-form regret bounds they lead to.

mod bernstein;
mod bounds;
mod central;
mod cgf;
mod dist;
pub mod esi;
mod squeezer;
pub mod verify;

pub use bernstein::{
    bernstein_profile_exact, bernstein_profile_mc, mc_ratios, BernsteinProfile, MomentEstimate, RatioEstimate,
    MEAN_FLOOR,
};
pub use bounds::{expected_regret_bound, rate_exponent, theorem_bound, tuned_gamma};
pub use central::{central_bound, CENTRAL_ETA_LIMIT};
pub use cgf::{cgf_profile, default_eta_grid, exact_cgf, log_grid, mc_cgf_profile, CgfProfile, PredictorCurve, ETA_MAX};
pub use dist::{FiniteDist, RealDist};
pub use esi::{esi_check, EsiReport};
pub use squeezer::{admissible_c, squeezer_c, squeezer_check, Squeeze};
pub use verify::{verify, CheckResult, ProfileReport, Suite, VerifyOptions, VerifyReport};
