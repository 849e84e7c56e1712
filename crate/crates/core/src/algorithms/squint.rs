//! Squint over a discrete grid of learning rates.
//!
//! The learner keeps, per expert, the cumulative instantaneous regret `R^k`
//! and its squared sum `V^k`. The weight of expert `k` is proportional to
//! `pi_k * sum_j rho_j eta_j exp(eta_j R^k - eta_j^2 V^k)`, which keeps the
//! potential `sum_k pi_k sum_j rho_j exp(eta_j R^k - eta_j^2 V^k)` at most
//! one after every round (since `exp(x - x^2) <= 1 + x` for `x >= -1/2`).
//! That single invariant certifies the regret bound returned by
//! [`SquintState::bound`].

use crate::error::{ensure, Result};
use crate::types::{LossVector, Pmf};

use super::HedgeLearner;

/// Largest admissible grid learning rate.
pub const MAX_ETA: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SquintState {
    prior: Pmf,
    log_prior: Vec<f64>,
    etas: Vec<f64>,
    grid_prior: Vec<f64>,
    // ln(rho_j * eta_j), the per-grid-point factor of the weights
    log_rho_eta: Vec<f64>,
    regret: Vec<f64>,
    variance: Vec<f64>,
    t: u64,
}

/// `2^{-j}` for `j = 1..max(1, ceil(log2(T)/2) + 1)`.
pub fn squint_grid(horizon_hint: u64) -> Vec<f64> {
    let half_log = ((horizon_hint.max(1) as f64).log2() / 2.0).ceil() as i32;
    let points = (half_log + 1).max(1);
    (1..=points).map(|j| 0.5f64.powi(j)).collect()
}

impl SquintState {
    pub fn new(prior: Pmf, horizon_hint: u64) -> Result<Self> {
        ensure!(horizon_hint >= 1, "horizon hint must be at least 1");
        Self::with_grid(prior, squint_grid(horizon_hint))
    }

    /// Squint with an explicit learning-rate grid and a uniform grid prior.
    pub fn with_grid(prior: Pmf, etas: Vec<f64>) -> Result<Self> {
        ensure!(!etas.is_empty(), "learning-rate grid must not be empty");
        for &eta in &etas {
            ensure!(
                eta > 0.0 && eta <= MAX_ETA,
                "grid learning rate {eta} outside (0, 1/2]"
            );
        }
        let k = prior.len();
        let rho = 1.0 / etas.len() as f64;
        Ok(SquintState {
            log_prior: prior.as_slice().iter().map(|p| p.ln()).collect(),
            prior,
            log_rho_eta: etas.iter().map(|e| (rho * e).ln()).collect(),
            grid_prior: vec![rho; etas.len()],
            etas,
            regret: vec![0.0; k],
            variance: vec![0.0; k],
            t: 0,
        })
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn grid_prior(&self) -> &[f64] {
        &self.grid_prior
    }

    pub fn prior(&self) -> &Pmf {
        &self.prior
    }

    /// Cumulative instantaneous regret `R^k` per expert.
    pub fn regrets(&self) -> &[f64] {
        &self.regret
    }

    /// Cumulative squared instantaneous regret `V^k` per expert.
    pub fn variances(&self) -> &[f64] {
        &self.variance
    }

    pub fn rounds(&self) -> u64 {
        self.t
    }

    #[inline]
    fn exponent(&self, j: usize, k: usize) -> f64 {
        let eta = self.etas[j];
        eta * self.regret[k] - eta * eta * self.variance[k]
    }

    /// Natural log of the potential
    /// `sum_k pi_k sum_j rho_j exp(eta_j R^k - eta_j^2 V^k)`.
    pub fn log_potential(&self) -> f64 {
        let log_rho: Vec<f64> = self.grid_prior.iter().map(|r| r.ln()).collect();
        let mut max = f64::NEG_INFINITY;
        for k in 0..self.regret.len() {
            for j in 0..self.etas.len() {
                max = max.max(self.log_prior[k] + log_rho[j] + self.exponent(j, k));
            }
        }
        let mut sum = 0.0;
        for k in 0..self.regret.len() {
            for j in 0..self.etas.len() {
                sum += (self.log_prior[k] + log_rho[j] + self.exponent(j, k) - max).exp();
            }
        }
        max + sum.ln()
    }

    /// Certified regret bound against expert `k`:
    /// `min_j eta_j V^k + (-ln pi_k - ln rho_j) / eta_j`.
    pub fn bound(&self, k: usize) -> f64 {
        self.etas
            .iter()
            .zip(&self.grid_prior)
            .map(|(&eta, &rho)| {
                eta * self.variance[k] + (-self.log_prior[k] - rho.ln()) / eta
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The complexity term `-ln pi_k - ln rho_j` at the grid point that
    /// minimizes [`SquintState::bound`].
    pub fn certified_complexity(&self, k: usize) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for (&eta, &rho) in self.etas.iter().zip(&self.grid_prior) {
            let complexity = -self.log_prior[k] - rho.ln();
            let value = eta * self.variance[k] + complexity / eta;
            if value < best.0 {
                best = (value, complexity);
            }
        }
        best.1
    }
}

impl HedgeLearner for SquintState {
    fn experts(&self) -> usize {
        self.regret.len()
    }

    fn predict(&self) -> Pmf {
        let k_count = self.regret.len();
        let mut max = f64::NEG_INFINITY;
        for k in 0..k_count {
            let base = self.log_prior[k];
            for j in 0..self.etas.len() {
                max = max.max(base + self.log_rho_eta[j] + self.exponent(j, k));
            }
        }
        let mut weights = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let base = self.log_prior[k] - max;
            let mut w = 0.0;
            for j in 0..self.etas.len() {
                w += (base + self.log_rho_eta[j] + self.exponent(j, k)).exp();
            }
            weights.push(w);
        }
        // The maximal term contributes exp(0) = 1, so the sum is >= 1.
        Pmf::from_weights(weights).expect("squint weights have a positive sum")
    }

    fn update(&mut self, losses: &LossVector) -> Result<Pmf> {
        ensure!(
            losses.len() == self.regret.len(),
            "expected {} losses, got {}",
            self.regret.len(),
            losses.len()
        );
        let weights = self.predict();
        let h = weights.dot(losses.as_slice());
        for ((r, v), &l) in self
            .regret
            .iter_mut()
            .zip(self.variance.iter_mut())
            .zip(losses.as_slice())
        {
            let inst = h - l;
            *r += inst;
            *v += inst * inst;
        }
        self.t += 1;
        Ok(weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(k: usize) -> Pmf {
        Pmf::uniform(k).unwrap()
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(squint_grid(1), vec![0.5]);
        assert_eq!(squint_grid(256), vec![0.5, 0.25, 0.125, 0.0625, 0.03125]);
        let s = SquintState::new(uniform(3), 256).unwrap();
        assert!(s.grid_prior().iter().all(|&r| (r - 0.2).abs() < 1e-15));
    }

    #[test]
    fn fresh_state_predicts_prior() {
        let prior = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let s = SquintState::new(prior.clone(), 100).unwrap();
        let w = s.predict();
        for (a, b) in w.as_slice().iter().zip(prior.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
        let s = SquintState::new(uniform(2), 1000).unwrap();
        assert_eq!(s.predict().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn one_round_weights() {
        let mut s = SquintState::with_grid(uniform(2), vec![0.5]).unwrap();
        s.update(&LossVector::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(s.regrets(), &[0.5, -0.5]);
        assert_eq!(s.variances(), &[0.25, 0.25]);
        let w = s.predict();
        let expected = 1.0 / (1.0 + (-0.5f64).exp());
        assert!((w.as_slice()[0] - expected).abs() < 1e-12);
        assert!((expected - 0.6225).abs() < 1e-4);
    }

    #[test]
    fn three_expert_increments() {
        let mut s = SquintState::with_grid(uniform(3), vec![0.5, 0.25]).unwrap();
        s.update(&LossVector::new(vec![0.0, 0.5, 1.0]).unwrap()).unwrap();
        let r = s.regrets();
        assert!((r[0] - 0.5).abs() < 1e-15 && r[1].abs() < 1e-15 && (r[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_losses_carry_no_information() {
        let mut s = SquintState::new(uniform(4), 64).unwrap();
        for _ in 0..10 {
            s.update(&LossVector::new(vec![0.3; 4]).unwrap()).unwrap();
        }
        assert!(s.regrets().iter().all(|r| r.abs() < 1e-15));
        assert!(s.variances().iter().all(|v| *v < 1e-30));
    }

    #[test]
    fn single_expert() {
        let mut s = SquintState::new(uniform(1), 16).unwrap();
        for i in 0..16 {
            let w = s.update(&LossVector::new(vec![(i % 3) as f64 / 2.0]).unwrap()).unwrap();
            assert_eq!(w.as_slice(), &[1.0]);
        }
        assert_eq!(s.regrets(), &[0.0]);
    }

    #[test]
    fn bound_values() {
        let mut s = SquintState::with_grid(uniform(1), vec![0.5]).unwrap();
        assert_eq!(s.bound(0), 0.0);
        s = SquintState::with_grid(uniform(2), vec![0.5, 0.25]).unwrap();
        s.variance[0] = 16.0;
        let l = 2.0 * 2f64.ln();
        let expected = (8.0 + l / 0.5).min(4.0 + l / 0.25);
        assert!((s.bound(0) - expected).abs() < 1e-12);
        assert!((s.bound(0) - 9.545).abs() < 1e-3);
        assert!((s.certified_complexity(0) - l).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SquintState::with_grid(uniform(2), vec![0.6]).is_err());
        assert!(SquintState::new(uniform(2), 0).is_err());
        let mut s = SquintState::new(uniform(2), 4).unwrap();
        assert!(s.update(&LossVector::new(vec![0.1]).unwrap()).is_err());
    }

    #[test]
    fn potential_and_bound_on_alternating_losses() {
        let mut s = SquintState::new(uniform(3), 512).unwrap();
        for t in 0..512u32 {
            let l = match t % 3 {
                0 => vec![0.0, 1.0, 0.5],
                1 => vec![1.0, 0.0, 0.5],
                _ => vec![0.2, 0.9, 0.0],
            };
            s.update(&LossVector::new(l).unwrap()).unwrap();
            assert!(s.log_potential() <= 1e-6f64.ln_1p());
            for k in 0..3 {
                assert!(s.regrets()[k] <= s.bound(k) + 1e-9);
            }
        }
    }

    #[test]
    fn log_domain_survives_long_runs() {
        let mut s = SquintState::with_grid(uniform(2), vec![0.5]).unwrap();
        for _ in 0..20_000 {
            s.update(&LossVector::new(vec![0.0, 1.0]).unwrap()).unwrap();
        }
        let w = s.predict();
        assert!(w.as_slice()[0] > 0.999_999);
        assert!(s.log_potential().is_finite());
    }
}
