//! Experts satisfying the `(1, kappa)`-Bernstein condition for a chosen
//! `kappa`.
//!
//! Expert `k` has loss `1/2 ± delta_k` with probability
//! `(1 ± delta_k^{2/kappa - 1}) / 2`, independently across experts and
//! rounds, so its mean excess loss is `delta_k^{2/kappa}` and its squared
//! excess loss is `delta_k^2`. Expert 0 has `delta = 0` and loses `1/2`
//! deterministically.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::FiniteDist;
use crate::error::{ensure, Result};

use super::{Best, EnvOracle, ExcessLaw};

pub const DEFAULT_EXPERTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaParams {
    pub kappa: f64,
    #[serde(rename = "K", default = "default_experts")]
    pub experts: usize,
    /// Common `delta` for every expert but the first; overrides the default
    /// `delta_k = 1/(k+1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Explicit per-expert deltas; `deltas[0]` must be 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
}

fn default_experts() -> usize {
    DEFAULT_EXPERTS
}

impl KappaParams {
    pub fn new(kappa: f64, experts: usize) -> Self {
        KappaParams {
            kappa,
            experts,
            delta: None,
            deltas: None,
        }
    }

    pub fn deltas(&self) -> Vec<f64> {
        if let Some(d) = &self.deltas {
            return d.clone();
        }
        (0..self.experts)
            .map(|k| match (k, self.delta) {
                (0, _) => 0.0,
                (_, Some(d)) => d,
                (k, None) => 1.0 / (k as f64 + 1.0),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            (0.0..=1.0).contains(&self.kappa),
            "kappa {} outside [0, 1]",
            self.kappa
        );
        let deltas = self.deltas();
        ensure!(deltas.len() >= 2, "kappa environment needs at least 2 experts");
        if let Some(d) = &self.deltas {
            ensure!(
                d.len() == self.experts,
                "{} deltas given for K = {}",
                d.len(),
                self.experts
            );
        }
        ensure!(deltas[0] == 0.0, "delta_0 must be 0");
        for &d in &deltas {
            ensure!((0.0..=0.5).contains(&d), "delta {d} outside [0, 1/2]");
        }
        Ok(())
    }

    /// Probability of the high loss `1/2 + delta`. At `kappa = 0` this is the
    /// limiting fair coin.
    pub fn up_probability(&self, delta: f64) -> f64 {
        if self.kappa == 0.0 || delta == 0.0 {
            0.5
        } else {
            0.5 * (1.0 + delta.powf(2.0 / self.kappa - 1.0))
        }
    }

    /// Law of the excess loss of an expert with the given delta.
    pub fn excess_law(&self, delta: f64) -> Result<FiniteDist> {
        if delta == 0.0 {
            return FiniteDist::point(0.0);
        }
        let up = self.up_probability(delta);
        FiniteDist::new(vec![(delta, up), (-delta, 1.0 - up)])
    }

    pub fn oracle(&self) -> Result<EnvOracle> {
        self.validate()?;
        let deltas = self.deltas();
        let mut laws = Vec::with_capacity(deltas.len());
        let mut exact_b: f64 = 0.0;
        for (k, &d) in deltas.iter().enumerate() {
            let law = self.excess_law(d)?;
            if d > 0.0 {
                // closed-form moments; the atom sum cancels badly for small delta
                let mean = if self.kappa == 0.0 {
                    0.0
                } else {
                    d * d.powf(2.0 / self.kappa - 1.0)
                };
                exact_b = exact_b.max(d * d / mean.powf(self.kappa));
            }
            laws.push(ExcessLaw::new(format!("k={k},delta={d}"), law));
        }
        Ok(EnvOracle {
            best: Best::Expert(0),
            kappa: self.kappa,
            bernstein_b: 1.0,
            exact_b: Some(exact_b),
            excess_laws: Some(laws),
            experts: Some(deltas.len()),
            geometry: None,
            mu_norm: None,
        })
    }

    pub(crate) fn sampler(&self) -> KappaSampler {
        let deltas = self.deltas();
        let up = deltas.iter().map(|&d| self.up_probability(d)).collect();
        KappaSampler { deltas, up }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct KappaSampler {
    deltas: Vec<f64>,
    up: Vec<f64>,
}

impl KappaSampler {
    pub(crate) fn sample(&self, rng: &mut impl Rng, out: &mut Vec<f64>) {
        out.clear();
        for (&d, &p) in self.deltas.iter().zip(&self.up) {
            let u: f64 = rng.random();
            out.push(if u < p { 0.5 + d } else { 0.5 - d });
        }
    }
}
