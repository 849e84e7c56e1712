//! Absolute loss `|u - x|` on `[0, 1]` with i.i.d. outcomes.
//!
//! The excess loss of a point `w` is `x^w = (w - u*) sign(w - x)`, with
//! `u*` the median and the subgradient 0 at `w = x`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::Domain;
use crate::conditions::FiniteDist;
use crate::error::{ensure, Result};
use crate::types::LossEvent;

use super::{Best, EnvOracle, ExcessLaw, OcoGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum AbsoluteParams {
    /// Uniform on `[0, 1]` (density bounded below by `m = 1`).
    Uniform,
    /// `x = a` with probability `p`, else `x = b`.
    TwoPoint { a: f64, b: f64, p: f64 },
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl AbsoluteParams {
    pub fn validate(&self) -> Result<()> {
        if let AbsoluteParams::TwoPoint { a, b, p } = *self {
            ensure!(
                (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b),
                "two-point atoms must lie in [0, 1]"
            );
            ensure!(a != b, "two-point atoms must differ");
            ensure!((0.0..=1.0).contains(&p), "two-point p outside [0, 1]");
            ensure!(p != 0.5, "two-point p = 1/2 has no unique median");
        }
        Ok(())
    }

    pub fn median(&self) -> f64 {
        match *self {
            AbsoluteParams::Uniform => 0.5,
            AbsoluteParams::TwoPoint { a, b, p } => {
                if p > 0.5 {
                    a
                } else {
                    b
                }
            }
        }
    }

    pub fn bernstein_b(&self) -> f64 {
        match *self {
            // 1/(2m) with density lower bound m = 1
            AbsoluteParams::Uniform => 0.5,
            AbsoluteParams::TwoPoint { p, .. } => 1.0 / (2.0 * p - 1.0).abs(),
        }
    }

    /// Exact law of `x^w` for the point `w`.
    pub fn excess_law(&self, w: f64) -> Result<FiniteDist> {
        let u = self.median();
        match *self {
            AbsoluteParams::Uniform => {
                // sign(w - x) = +1 with probability w
                FiniteDist::new(vec![(w - u, w), (-(w - u), 1.0 - w)])
            }
            AbsoluteParams::TwoPoint { a, b, p } => FiniteDist::new(vec![
                ((w - u) * sign(w - a), p),
                ((w - u) * sign(w - b), 1.0 - p),
            ]),
        }
    }

    /// `sup_w E[(x^w)^2] / E[x^w]`.
    pub fn exact_b(&self) -> f64 {
        match *self {
            AbsoluteParams::Uniform => 0.5,
            AbsoluteParams::TwoPoint { a, b, p } => {
                let u = self.median();
                // Between the atoms the ratio grows to |b - a|/|2p - 1|; outside
                // them x^w = |w - u*| deterministically.
                ((b - a).abs() / (2.0 * p - 1.0).abs()).max(u.max(1.0 - u))
            }
        }
    }

    pub fn representative_points(&self) -> Vec<f64> {
        let u = self.median();
        let mut pts: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        if let AbsoluteParams::TwoPoint { a, b, .. } = *self {
            let other = if u == a { b } else { a };
            // approach the far atom from the median's side
            pts.push(other - (other - u) * 1e-3);
        }
        pts.retain(|w| (w - u).abs() > 1e-12);
        pts
    }

    pub fn oracle(&self) -> Result<EnvOracle> {
        self.validate()?;
        let laws = self
            .representative_points()
            .into_iter()
            .map(|w| Ok(ExcessLaw::new(format!("w={w}"), self.excess_law(w)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EnvOracle {
            best: Best::Point(vec![self.median()]),
            kappa: 1.0,
            bernstein_b: self.bernstein_b(),
            exact_b: Some(self.exact_b()),
            excess_laws: Some(laws),
            experts: None,
            geometry: Some(OcoGeometry {
                domain: Domain::Box {
                    lo: vec![0.0],
                    hi: vec![1.0],
                },
                diameter: 1.0,
                grad_bound: 1.0,
            }),
            mu_norm: None,
        })
    }

    pub(crate) fn sample(&self, rng: &mut impl Rng) -> LossEvent {
        let x = match *self {
            AbsoluteParams::Uniform => rng.random::<f64>(),
            AbsoluteParams::TwoPoint { a, b, p } => {
                if rng.random::<f64>() < p {
                    a
                } else {
                    b
                }
            }
        };
        LossEvent::Absolute { x }
    }
}
