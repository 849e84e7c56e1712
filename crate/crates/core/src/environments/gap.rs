//! Experts with a gap: the best expert's mean loss is `alpha` below all others.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::FiniteDist;
use crate::error::{ensure, Result};

use super::{Best, EnvOracle, ExcessLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GapNoise {
    /// Independent Bernoulli losses with the stated means.
    #[default]
    Bernoulli,
    /// Losses equal to their means every round.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapParams {
    pub alpha: f64,
    #[serde(rename = "K")]
    pub experts: usize,
    #[serde(default = "default_mu0")]
    pub mu0: f64,
    #[serde(default)]
    pub noise: GapNoise,
}

fn default_mu0() -> f64 {
    0.3
}

impl GapParams {
    pub fn new(alpha: f64, experts: usize) -> Self {
        GapParams {
            alpha,
            experts,
            mu0: default_mu0(),
            noise: GapNoise::Bernoulli,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.alpha > 0.0 && self.alpha <= 1.0,
            "gap alpha {} outside (0, 1]",
            self.alpha
        );
        ensure!(self.experts >= 2, "gap environment needs K >= 2 experts");
        ensure!(
            self.mu0 >= 0.0 && self.mu0 + self.alpha <= 1.0,
            "means mu0 = {} and mu0 + alpha = {} must lie in [0, 1]",
            self.mu0,
            self.mu0 + self.alpha
        );
        Ok(())
    }

    fn excess_law(&self) -> Result<FiniteDist> {
        let (m0, m1) = (self.mu0, self.mu0 + self.alpha);
        match self.noise {
            GapNoise::Deterministic => FiniteDist::point(self.alpha),
            GapNoise::Bernoulli => FiniteDist::new(vec![
                (1.0, m1 * (1.0 - m0)),
                (-1.0, m0 * (1.0 - m1)),
                (0.0, m0 * m1 + (1.0 - m0) * (1.0 - m1)),
            ]),
        }
    }

    pub fn oracle(&self) -> Result<EnvOracle> {
        self.validate()?;
        let law = self.excess_law()?;
        let exact_b = law.second_moment() / law.mean();
        Ok(EnvOracle {
            best: Best::Expert(0),
            kappa: 1.0,
            bernstein_b: 1.0 / self.alpha,
            exact_b: Some(exact_b),
            excess_laws: Some(vec![
                ExcessLaw::new("k*", FiniteDist::point(0.0)?),
                ExcessLaw::new("k>=1", law),
            ]),
            experts: Some(self.experts),
            geometry: None,
            mu_norm: None,
        })
    }

    pub(crate) fn sample(&self, rng: &mut impl Rng, out: &mut Vec<f64>) {
        out.clear();
        for k in 0..self.experts {
            let mean = if k == 0 { self.mu0 } else { self.mu0 + self.alpha };
            out.push(match self.noise {
                GapNoise::Deterministic => mean,
                GapNoise::Bernoulli => {
                    if rng.random::<f64>() < mean {
                        1.0
                    } else {
                        0.0
                    }
                }
            });
        }
    }
}
