//! Second-order adaptive online learning under stochastic (Bernstein)
//! conditions.
//!
//! The crate bundles
//!
//! * learners: Squint for prediction with expert advice, full-matrix
//!   MetaGrad for online convex optimization, and FTL / fixed-rate Hedge
//!   baselines ([`algorithms`]);
//! * stochastic environments with exactly known Bernstein parameters
//!   `(B, kappa)` ([`environments`]);
//! * numerical checks of the exponential-moment calculus that connects
//!   second-order regret bounds to fast rates ([`conditions`]);
//! * a reproducible experiment harness that fits regret-rate exponents
//!   ([`harness`]).

pub mod algorithms;
pub mod conditions;
pub mod environments;
mod error;
pub mod harness;
pub mod seed;
pub mod types;

pub use error::{Error, Result};
pub use seed::{derive_seed, SeedLabel};
pub use types::{
    Checkpoint, CheckpointPolicy, LossEvent, LossVector, Pmf, RegretTrace, RoundIncrement, RunKey,
};
