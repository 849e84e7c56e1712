//! Fixed-rate exponential weights and Follow-the-Leader.

use crate::error::{ensure, Result};
use crate::types::{LossVector, Pmf};

use super::HedgeLearner;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    /// `w^k ∝ exp(-eta * L^k)`.
    FixedHedge { eta: f64 },
    /// Point mass on the current leader, lowest index on ties.
    FollowTheLeader,
}

#[derive(Debug, Clone)]
pub struct BaselineState {
    kind: BaselineKind,
    cum_losses: Vec<f64>,
}

impl BaselineState {
    pub fn new(kind: BaselineKind, experts: usize) -> Result<Self> {
        ensure!(experts > 0, "need at least one expert");
        if let BaselineKind::FixedHedge { eta } = kind {
            ensure!(eta.is_finite() && eta >= 0.0, "hedge rate {eta} must be >= 0");
        }
        Ok(BaselineState {
            kind,
            cum_losses: vec![0.0; experts],
        })
    }

    pub fn ftl(experts: usize) -> Result<Self> {
        Self::new(BaselineKind::FollowTheLeader, experts)
    }

    pub fn hedge(eta: f64, experts: usize) -> Result<Self> {
        Self::new(BaselineKind::FixedHedge { eta }, experts)
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    pub fn cum_losses(&self) -> &[f64] {
        &self.cum_losses
    }

    /// Index of the expert with the smallest cumulative loss.
    pub fn leader(&self) -> usize {
        let mut best = 0;
        for (k, &l) in self.cum_losses.iter().enumerate().skip(1) {
            if l < self.cum_losses[best] {
                best = k;
            }
        }
        best
    }

    #[cfg(test)]
    pub(crate) fn set_cum_losses(&mut self, losses: Vec<f64>) {
        self.cum_losses = losses;
    }
}

impl HedgeLearner for BaselineState {
    fn experts(&self) -> usize {
        self.cum_losses.len()
    }

    fn predict(&self) -> Pmf {
        match self.kind {
            BaselineKind::FixedHedge { eta } => {
                let logw: Vec<f64> = self.cum_losses.iter().map(|l| -eta * l).collect();
                Pmf::from_log_weights(&logw).expect("finite log-weights")
            }
            BaselineKind::FollowTheLeader => {
                let mut w = vec![0.0; self.cum_losses.len()];
                w[self.leader()] = 1.0;
                Pmf::new(w).expect("point mass")
            }
        }
    }

    fn update(&mut self, losses: &LossVector) -> Result<Pmf> {
        ensure!(
            losses.len() == self.cum_losses.len(),
            "expected {} losses, got {}",
            self.cum_losses.len(),
            losses.len()
        );
        let w = self.predict();
        for (c, l) in self.cum_losses.iter_mut().zip(losses.as_slice()) {
            *c += l;
        }
        Ok(w)
    }
}
