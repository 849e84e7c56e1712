//! Online learners.
//!
//! Hedge learners implement [`HedgeLearner`]: they play a [`Pmf`] over
//! experts and are updated with the full loss vector of the round.
//! MetaGrad works over a convex [`Domain`] and is driven by subgradients.

pub mod baseline;
pub mod metagrad;
pub mod projection;
pub mod squint;

pub use baseline::{BaselineKind, BaselineState};
pub use metagrad::{metagrad_grid, surrogate_loss, MetaGradRound, MetaGradState};
pub use projection::{project_mahalanobis, Domain};
pub use squint::{squint_grid, SquintState};

use crate::error::Result;
use crate::types::{LossVector, Pmf};

/// A learner for prediction with expert advice.
pub trait HedgeLearner: Send {
    fn experts(&self) -> usize;

    /// Weights for the next round.
    fn predict(&self) -> Pmf;

    /// Plays [`HedgeLearner::predict`], observes `losses`, and returns the
    /// weights that were played.
    fn update(&mut self, losses: &LossVector) -> Result<Pmf>;
}
