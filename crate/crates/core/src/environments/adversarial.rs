//! Fair random signs: every predictor has the same mean loss, so `kappa = 0`
//! and the best one can hope for is regret of order `sqrt(T)`.
//!
//! In the Hedge setting each expert's loss is an independent fair bit. In
//! the OCO setting the learner plays in `[0, 1]^K` against the mean
//! coordinate-wise absolute loss of fair bits; all points have expected loss
//! `1/2` and the comparator is the corner `0` by convention. Gradients have
//! norm at most `1/sqrt(K)` and the box has diameter `sqrt(K)`, so `DG = 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::Domain;
use crate::conditions::FiniteDist;
use crate::error::{ensure, Result};
use crate::types::LossEvent;

use super::{Best, EnvOracle, ExcessLaw, OcoGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarialParams {
    #[serde(rename = "K")]
    pub experts: usize,
}

impl AdversarialParams {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.experts >= 2, "adversarial environment needs K >= 2");
        Ok(())
    }

    pub fn hedge_oracle(&self) -> Result<EnvOracle> {
        self.validate()?;
        let law = FiniteDist::new(vec![(1.0, 0.25), (-1.0, 0.25), (0.0, 0.5)])?;
        Ok(EnvOracle {
            best: Best::Expert(0),
            kappa: 0.0,
            bernstein_b: 1.0,
            exact_b: Some(law.second_moment()),
            excess_laws: Some(vec![
                ExcessLaw::new("k*", FiniteDist::point(0.0)?),
                ExcessLaw::new("k>=1", law),
            ]),
            experts: Some(self.experts),
            geometry: None,
            mu_norm: None,
        })
    }

    pub fn oco_domain(&self) -> Domain {
        Domain::Box {
            lo: vec![0.0; self.experts],
            hi: vec![1.0; self.experts],
        }
    }

    /// Exact law of `<w - 0, g>` for a point `w` of the box.
    pub fn oco_excess_law(&self, w: &[f64]) -> Result<FiniteDist> {
        // sum over 2^K bit patterns, grouped by value
        let k = self.experts;
        let scale = k as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mass = 0.5f64.powi(k as i32);
        for bits in 0..(1usize << k) {
            let v: f64 = (0..k)
                .map(|i| {
                    let b = ((bits >> i) & 1) as f64;
                    let s = if w[i] > b {
                        1.0
                    } else if w[i] < b {
                        -1.0
                    } else {
                        0.0
                    };
                    w[i] * s / scale
                })
                .sum();
            match atoms.iter_mut().find(|a| (a.0 - v).abs() < 1e-15) {
                Some(a) => a.1 += mass,
                None => atoms.push((v, mass)),
            }
        }
        FiniteDist::new(atoms)
    }

    pub fn representative_points(&self) -> Vec<Vec<f64>> {
        let k = self.experts;
        let mut pts = vec![vec![0.5; k], vec![1.0; k], vec![0.25; k]];
        let mut e = vec![0.0; k];
        e[0] = 1.0;
        pts.push(e);
        pts
    }

    pub fn oco_oracle(&self) -> Result<EnvOracle> {
        self.validate()?;
        let laws = if self.experts <= 12 {
            Some(
                self.representative_points()
                    .iter()
                    .enumerate()
                    .map(|(i, w)| Ok(ExcessLaw::new(format!("w#{i}"), self.oco_excess_law(w)?)))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let exact_b = laws.as_ref().map(|l| {
            l.iter()
                .map(|law| law.dist.second_moment())
                .fold(0.0, f64::max)
        });
        Ok(EnvOracle {
            best: Best::Point(vec![0.0; self.experts]),
            kappa: 0.0,
            bernstein_b: 1.0,
            exact_b,
            excess_laws: laws,
            experts: None,
            geometry: Some(OcoGeometry {
                domain: self.oco_domain(),
                diameter: (self.experts as f64).sqrt(),
                grad_bound: 1.0 / (self.experts as f64).sqrt(),
            }),
            mu_norm: None,
        })
    }

    pub(crate) fn sample_hedge(&self, rng: &mut impl Rng, out: &mut Vec<f64>) {
        out.clear();
        for _ in 0..self.experts {
            out.push(if rng.random::<bool>() { 1.0 } else { 0.0 });
        }
    }

    pub(crate) fn sample_oco(&self, rng: &mut impl Rng) -> LossEvent {
        LossEvent::Coins {
            bits: (0..self.experts).map(|_| u8::from(rng.random::<bool>())).collect(),
        }
    }
}
