//! Binary sequences from an order-`m` Markov chain, predicted by all
//! `2^{2^m}` context-to-bit experts under 0/1 loss.
//!
//! Contexts are encoded as `a = sum_{i=1..m} z_{t-i} 2^{i-1}` (most recent
//! bit lowest); expert `f` is the `2^m`-bit integer with `f(a) = (f >> a) & 1`.
//! The chain starts from the all-zero context.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::FiniteDist;
use crate::error::{ensure, Result};

use super::{Best, EnvOracle, ExcessLaw};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovParams {
    pub m: usize,
    /// `p[a] = P(z_t = 1 | context a)`.
    pub p: Vec<f64>,
}

impl MarkovParams {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            (1..=MAX_ORDER).contains(&self.m),
            "markov order {} outside 1..={MAX_ORDER}",
            self.m
        );
        ensure!(
            self.p.len() == 1 << self.m,
            "markov order {} needs {} transition probabilities, got {}",
            self.m,
            1 << self.m,
            self.p.len()
        );
        for &p in &self.p {
            ensure!((0.0..=1.0).contains(&p), "transition probability {p} outside [0, 1]");
            ensure!(p != 0.5, "transition probability 1/2 leaves B undefined");
        }
        Ok(())
    }

    pub fn contexts(&self) -> usize {
        1 << self.m
    }

    pub fn experts(&self) -> usize {
        1 << self.contexts()
    }

    /// Encoding of `f*(a) = 1{p_a >= 1/2}`.
    pub fn best_expert(&self) -> usize {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= 0.5)
            .map(|(a, _)| 1usize << a)
            .sum()
    }

    pub fn bernstein_b(&self) -> f64 {
        let margin = self
            .p
            .iter()
            .map(|p| (p - 0.5).abs())
            .fold(f64::INFINITY, f64::min);
        1.0 / (2.0 * margin)
    }

    /// Conditional law, given context `a`, of the excess loss of any expert
    /// that disagrees with `f*` on `a`.
    pub fn disagreement_law(&self, a: usize) -> Result<FiniteDist> {
        let p = self.p[a];
        let right = p.max(1.0 - p);
        FiniteDist::new(vec![(1.0, right), (-1.0, 1.0 - right)])
    }

    pub fn oracle(&self) -> Result<EnvOracle> {
        self.validate()?;
        let mut laws = vec![ExcessLaw::new("agree", FiniteDist::point(0.0)?)];
        for a in 0..self.contexts() {
            laws.push(ExcessLaw::new(
                format!("disagree|a={a}"),
                self.disagreement_law(a)?,
            ));
        }
        let b = self.bernstein_b();
        Ok(EnvOracle {
            best: Best::Expert(self.best_expert()),
            kappa: 1.0,
            bernstein_b: b,
            // Conditionally on the worst context the ratio E[x^2]/E[x] is B.
            exact_b: Some(b),
            excess_laws: Some(laws),
            experts: Some(self.experts()),
            geometry: None,
            mu_norm: None,
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct MarkovSampler {
    params: MarkovParams,
    context: usize,
}

impl MarkovSampler {
    pub(crate) fn new(params: MarkovParams) -> Self {
        MarkovSampler { params, context: 0 }
    }

    pub(crate) fn context(&self) -> usize {
        self.context
    }

    /// Draws `z_t`, writes every expert's loss, and shifts the context.
    pub(crate) fn sample(&mut self, rng: &mut impl Rng, out: &mut Vec<f64>) -> u8 {
        let a = self.context;
        let z = u8::from(rng.random::<f64>() < self.params.p[a]);
        out.clear();
        for f in 0..self.params.experts() {
            let pred = ((f >> a) & 1) as u8;
            out.push(if pred == z { 0.0 } else { 1.0 });
        }
        let mask = self.params.contexts() - 1;
        self.context = ((a << 1) | z as usize) & mask;
        z
    }
}
