//! Exponential stochastic inequalities: `X` is ESI-negative when
//! `E[exp(X)] <= 1`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

use super::RealDist;

/// Rounding allowance on `E[exp(X)] <= 1`.
pub const ESI_TOLERANCE: f64 = 1e-12;

pub const TAIL_DELTAS: [f64; 3] = [0.5, 0.1, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub delta: f64,
    /// `P(X >= ln(1/delta))`.
    pub probability: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsiReport {
    pub exp_moment: f64,
    pub is_esi: bool,
    pub mean: f64,
    /// Consequences checked only when `is_esi`; empty otherwise.
    pub tails: Vec<TailCheck>,
    pub pass: bool,
}

fn is_esi(exp_moment: f64) -> bool {
    exp_moment <= 1.0 + ESI_TOLERANCE
}

/// Tests `E[exp(X)] <= 1` and, when it holds, its consequences
/// `E[X] <= 0` and `P(X >= ln(1/delta)) <= delta`.
pub fn esi_check(dist: &RealDist) -> EsiReport {
    let exp_moment = dist.exp_moment();
    let mean = dist.mean();
    if !is_esi(exp_moment) {
        return EsiReport {
            exp_moment,
            is_esi: false,
            mean,
            tails: Vec::new(),
            pass: true,
        };
    }
    let tails: Vec<TailCheck> = TAIL_DELTAS
        .iter()
        .map(|&delta| {
            // shrink the threshold by the ESI rounding allowance
            let probability = dist.tail((1.0 / delta).ln() + ESI_TOLERANCE);
            TailCheck {
                delta,
                probability,
                pass: probability <= delta + ESI_TOLERANCE,
            }
        })
        .collect();
    let pass = mean <= ESI_TOLERANCE && tails.iter().all(|t| t.pass);
    EsiReport {
        exp_moment,
        is_esi: true,
        mean,
        tails,
        pass,
    }
}

/// Mixture `sum_i w_i X_i` of laws (a draw picks `i` with probability `w_i`).
pub fn mixture(families: &[RealDist], weights: &[f64]) -> Result<RealDist> {
    ensure!(families.len() == weights.len(), "one weight per family required");
    let mut atoms = Vec::new();
    for (dist, &w) in families.iter().zip(weights) {
        ensure!(w >= 0.0, "mixture weight {w} is negative");
        atoms.extend(dist.atoms.iter().map(|&(v, p)| (v, w * p)));
    }
    RealDist::new(atoms)
}

/// Convex-combination property: if every family is ESI-negative so is
/// their mixture. Returns `None` when the premise fails.
pub fn check_convex_combination(families: &[RealDist], weights: &[f64]) -> Result<Option<bool>> {
    if !families.iter().all(|d| is_esi(d.exp_moment())) {
        return Ok(None);
    }
    Ok(Some(is_esi(mixture(families, weights)?.exp_moment())))
}

/// A sequence `X_1, ..., X_n` in which the law of `X_{i+1}` depends on the
/// atom index drawn for `X_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub first: RealDist,
    /// `kernels[i][j]` is the law of `X_{i+2}` after atom `j` of `X_{i+1}`.
    pub kernels: Vec<Vec<RealDist>>,
}

impl Chain {
    pub fn validate(&self) -> Result<()> {
        let mut width = self.first.atoms.len();
        for (i, step) in self.kernels.iter().enumerate() {
            ensure!(
                step.len() == width,
                "step {} has {} kernels for {width} atoms",
                i + 2,
                step.len()
            );
            width = step[0].atoms.len();
            ensure!(
                step.iter().all(|d| d.atoms.len() == width),
                "kernels of step {} differ in support size",
                i + 2
            );
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.kernels.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `E[exp(X_1 + ... + X_n)]` by enumerating every path.
    pub fn exp_moment_of_sum(&self) -> f64 {
        fn rec(kernels: &[Vec<RealDist>], dist: &RealDist) -> f64 {
            dist.atoms
                .iter()
                .enumerate()
                .map(|(j, &(v, p))| {
                    let rest = match kernels.split_first() {
                        None => 1.0,
                        Some((step, tail)) => rec(tail, &step[j]),
                    };
                    p * v.exp() * rest
                })
                .sum()
        }
        rec(&self.kernels, &self.first)
    }

    /// Every conditional law is ESI-negative.
    pub fn conditionally_esi(&self) -> bool {
        is_esi(self.first.exp_moment())
            && self
                .kernels
                .iter()
                .all(|step| step.iter().all(|d| is_esi(d.exp_moment())))
    }
}

/// Chain rule: conditionally ESI-negative increments have an ESI-negative
/// sum. Returns `None` when the premise fails.
pub fn check_chain_rule(chain: &Chain) -> Result<Option<bool>> {
    chain.validate()?;
    if !chain.conditionally_esi() {
        return Ok(None);
    }
    // each conditional factor may exceed 1 by the tolerance
    let slack = (1.0 + ESI_TOLERANCE).powi(chain.len() as i32);
    Ok(Some(chain.exp_moment_of_sum() <= slack))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let x = RealDist::new(vec![(2f64.ln(), 0.25), ((2.0f64 / 3.0).ln(), 0.75)]).unwrap();
        let r = esi_check(&x);
        assert!((r.exp_moment - 1.0).abs() < 1e-15);
        assert!(r.is_esi && r.pass);
        assert!((r.mean - (-0.1308)).abs() < 1e-4);
    }

    #[test]
    fn zero_is_tight() {
        let r = esi_check(&RealDist::new(vec![(0.0, 1.0)]).unwrap());
        assert_eq!(r.exp_moment, 1.0);
        assert_eq!(r.mean, 0.0);
        assert!(r.pass);
        assert!(r.tails.iter().all(|t| t.probability == 0.0));
    }

    #[test]
    fn mixture_example() {
        let a = RealDist::new(vec![(2f64.ln(), 0.25), ((2.0f64 / 3.0).ln(), 0.75)]).unwrap();
        let b = RealDist::new(vec![(-0.5, 0.5), (0.3, 0.5)]).unwrap();
        assert!(b.exp_moment() <= 1.0);
        assert_eq!(check_convex_combination(&[a, b], &[0.3, 0.7]).unwrap(), Some(true));
    }

    #[test]
    fn chain_of_two() {
        let first = RealDist::new(vec![(1.5f64.ln(), 0.5), (-10.0, 0.5)]).unwrap();
        // after the big draw the next step is strongly negative
        let k = vec![
            RealDist::new(vec![(-1.0, 1.0)]).unwrap(),
            RealDist::new(vec![(0.0, 1.0)]).unwrap(),
        ];
        let chain = Chain {
            first,
            kernels: vec![k],
        };
        assert_eq!(check_chain_rule(&chain).unwrap(), Some(true));
        let expected = 0.5 * 1.5 * (-1f64).exp() + 0.5 * (-10f64).exp();
        assert!((chain.exp_moment_of_sum() - expected).abs() < 1e-15);
    }
}
