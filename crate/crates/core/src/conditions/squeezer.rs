use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

use super::FiniteDist;

/// Slack below which a conclusion counts as violated.
pub const SLACK_TOLERANCE: f64 = 1e-9;

/// Largest `c` for which the variance adjustment holds at `(eta, gamma)`:
/// `(sqrt(2a + gamma^2 + 1) - a - 1) / (4 eta^2)` with `a = |2 eta - gamma|`.
///
/// Evaluated in the cancellation-free form
/// `(gamma - eta) / (eta (sqrt(2a + gamma^2 + 1) + a + 1))`. At `eta = 0`
/// the value is irrelevant (it multiplies `eta^2`) and `1/2` is returned.
pub fn admissible_c(eta: f64, gamma: f64) -> Result<f64> {
    ensure!(eta >= 0.0, "eta must be nonnegative, got {eta}");
    ensure!(eta <= gamma, "need eta <= gamma, got eta = {eta}, gamma = {gamma}");
    if eta == 0.0 {
        return Ok(0.5);
    }
    let a = (2.0 * eta - gamma).abs();
    let root = (2.0 * a + gamma * gamma + 1.0).sqrt();
    Ok((gamma - eta) / (eta * (root + a + 1.0)))
}

/// `1 / (1 + sqrt(1 + 4 eta^2))`, the value of `admissible_c(eta, 2 eta)`.
pub fn squeezer_c(eta: f64) -> f64 {
    1.0 / (1.0 + (1.0 + 4.0 * eta * eta).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Squeeze {
    /// The hypothesis fails, so nothing is claimed.
    Vacuous,
    /// `slack` is the log-domain gap `rhs - lhs` of the conclusion.
    Checked { slack: f64 },
}

impl Squeeze {
    pub fn passed(self) -> bool {
        match self {
            Squeeze::Vacuous => true,
            Squeeze::Checked { slack } => slack >= -SLACK_TOLERANCE,
        }
    }
}

/// Checks that `E exp(-gamma x) <= exp(gamma eps)` implies
/// `E exp(c eta^2 x^2 - eta x) <= exp(c eta^2 eps^2 + eta eps)` with
/// `c = admissible_c(eta, gamma)`.
pub fn squeezer_check(dist: &FiniteDist, eta: f64, gamma: f64, eps: f64) -> Result<Squeeze> {
    ensure!((-1.0..=1.0).contains(&eps), "epsilon {eps} outside [-1, 1]");
    let c = admissible_c(eta, gamma)?;
    let hyp = dist.log_mgf_of(|x| -gamma * x);
    // a tight epsilon computed from the same law may round past equality
    if hyp > gamma * eps + 1e-12 * (1.0 + hyp.abs()) {
        return Ok(Squeeze::Vacuous);
    }
    let lhs = dist.log_mgf_of(|x| c * eta * eta * x * x - eta * x);
    let rhs = c * eta * eta * eps * eps + eta * eps;
    Ok(Squeeze::Checked { slack: rhs - lhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::exact_cgf;

    #[test]
    fn examples() {
        assert_eq!(admissible_c(0.0, 0.3).unwrap(), 0.5);
        let c = admissible_c(0.5, 1.0).unwrap();
        assert!((c - 1.0 / (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((c - 0.414214).abs() < 1e-6);
        assert!(admissible_c(0.6, 0.5).is_err());
    }

    #[test]
    fn naive_form_agrees_away_from_zero() {
        for &(eta, gamma) in &[(0.3, 0.5), (0.5, 0.6), (0.2, 1.5), (1.0, 1.2)] {
            let a = f64::abs(2.0 * eta - gamma);
            let naive = ((2.0 * a + gamma * gamma + 1.0).sqrt() - a - 1.0) / (4.0 * eta * eta);
            assert!((admissible_c(eta, gamma).unwrap() - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_and_coin() {
        let zero = FiniteDist::point(0.0).unwrap();
        assert_eq!(
            squeezer_check(&zero, 0.3, 0.5, 0.0).unwrap(),
            Squeeze::Checked { slack: 0.0 }
        );
        let coin = FiniteDist::new(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap();
        let eps = exact_cgf(&coin, 1.0);
        let out = squeezer_check(&coin, 0.5, 1.0, eps).unwrap();
        assert!(matches!(out, Squeeze::Checked { slack } if slack >= 0.0), "{out:?}");
        // an epsilon below the truth makes the hypothesis fail
        assert_eq!(squeezer_check(&coin, 0.5, 1.0, eps - 0.1).unwrap(), Squeeze::Vacuous);
    }
}
