//! Full-matrix MetaGrad.
//!
//! A grid of learning rates `eta_i = 2^{-i} / (5 D G)` each drives an
//! Online-Newton-Step slave on the surrogate loss
//!
//! ```text
//! s_t^eta(u) = -eta <w_t - u, g_t> + eta^2 <w_t - u, g_t>^2
//! ```
//!
//! and a master mixes the slaves with exponential weights on the same
//! surrogates, tilted by `eta_i`:
//! `w_t = sum_i p_i eta_i w_i / sum_i p_i eta_i`. The tilt makes the mixture
//! loss `-ln sum_i p_i exp(-s_t^{eta_i}(w_i))` nonnegative every round.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure, Result};
use crate::types::{dot, Pmf};

use super::projection::{project_mahalanobis, Domain};

/// Scale of the largest grid learning rate, as a multiple of `1/(D G)`.
pub const ETA_SCALE: f64 = 1.0 / 5.0;

/// `eta_i = 2^{-i}/(5 D G)` for `i = 0..=ceil(log2(T)/2)`.
pub fn metagrad_grid(diameter: f64, grad_bound: f64, horizon_hint: u64) -> Vec<f64> {
    let top = ((horizon_hint.max(1) as f64).log2() / 2.0).ceil() as i32;
    (0..=top.max(0))
        .map(|i| 0.5f64.powi(i) * ETA_SCALE / (diameter * grad_bound))
        .collect()
}

#[derive(Debug, Clone)]
struct Slave {
    eta: f64,
    point: Vec<f64>,
    precision: DMatrix<f64>,
}

/// What happened in one MetaGrad round; used for accounting and by the
/// surrogate-regret checks.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaGradRound {
    /// The point `w_t` played this round.
    pub played: Vec<f64>,
    /// Slave points `w_t^{eta_i}` before the update.
    pub slave_points: Vec<Vec<f64>>,
    /// Master weights before the update.
    pub master: Vec<f64>,
    /// `s_t^{eta_i}(w_t^{eta_i})` per grid point.
    pub surrogate: Vec<f64>,
    /// `-ln sum_i p_i exp(-s_t^{eta_i}(w_t^{eta_i}))`.
    pub mix_loss: f64,
}

#[derive(Debug, Clone)]
pub struct MetaGradState {
    domain: Domain,
    diameter: f64,
    grad_bound: f64,
    log_prior: Vec<f64>,
    log_master: Vec<f64>,
    slaves: Vec<Slave>,
    t: u64,
}

impl MetaGradState {
    pub fn new(domain: Domain, diameter: f64, grad_bound: f64, horizon_hint: u64) -> Result<Self> {
        ensure!(
            diameter > 0.0 && diameter.is_finite(),
            "diameter bound {diameter} must be > 0"
        );
        ensure!(
            grad_bound > 0.0 && grad_bound.is_finite(),
            "gradient bound {grad_bound} must be > 0"
        );
        ensure!(
            diameter >= domain.diameter() * (1.0 - 1e-12),
            "diameter bound {diameter} is below the domain diameter {}",
            domain.diameter()
        );
        let etas = metagrad_grid(diameter, grad_bound, horizon_hint);
        let prior = Pmf::from_weights(
            (0..etas.len())
                .map(|i| 1.0 / ((i as f64 + 1.0) * (i as f64 + 2.0)))
                .collect(),
        )?;
        let log_prior: Vec<f64> = prior.as_slice().iter().map(|p| p.ln()).collect();
        let d = domain.dim();
        let centroid = domain.centroid();
        let precision = DMatrix::identity(d, d) / (diameter * diameter);
        let slaves = etas
            .iter()
            .map(|&eta| Slave {
                eta,
                point: centroid.clone(),
                precision: precision.clone(),
            })
            .collect();
        Ok(MetaGradState {
            domain,
            diameter,
            grad_bound,
            log_master: log_prior.clone(),
            log_prior,
            slaves,
            t: 0,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    pub fn etas(&self) -> Vec<f64> {
        self.slaves.iter().map(|s| s.eta).collect()
    }

    pub fn prior(&self) -> Vec<f64> {
        self.log_prior.iter().map(|l| l.exp()).collect()
    }

    pub fn master(&self) -> Pmf {
        Pmf::from_log_weights(&self.log_master).expect("finite master log-weights")
    }

    pub fn slave_points(&self) -> Vec<Vec<f64>> {
        self.slaves.iter().map(|s| s.point.clone()).collect()
    }

    pub fn precisions(&self) -> Vec<DMatrix<f64>> {
        self.slaves.iter().map(|s| s.precision.clone()).collect()
    }

    pub fn rounds(&self) -> u64 {
        self.t
    }

    /// `ln det(D^2 * precision_i)` for slave `i`.
    pub fn log_det_scaled_precision(&self, i: usize) -> f64 {
        let scaled = &self.slaves[i].precision * (self.diameter * self.diameter);
        let chol = scaled.cholesky().expect("precision stays SPD");
        2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// The tilted mixture of the slave points.
    pub fn predict(&self) -> Vec<f64> {
        let master = self.master();
        let d = self.dim();
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        for (p, s) in master.as_slice().iter().zip(&self.slaves) {
            let m = p * s.eta;
            den += m;
            for (n, x) in num.iter_mut().zip(&s.point) {
                *n += m * x;
            }
        }
        num.iter().map(|n| n / den).collect()
    }

    /// Feeds the (sub)gradient at the point returned by [`Self::predict`].
    pub fn update(&mut self, gradient: &[f64]) -> Result<MetaGradRound> {
        let d = self.dim();
        ensure!(gradient.len() == d, "gradient has dimension {}, expected {d}", gradient.len());
        let norm = dot(gradient, gradient).sqrt();
        ensure!(
            norm <= self.grad_bound + 1e-9,
            "gradient norm {norm} exceeds the bound {}",
            self.grad_bound
        );
        let played = self.predict();
        let master = self.master().as_slice().to_vec();
        let slave_points = self.slave_points();

        let mut surrogate = Vec::with_capacity(self.slaves.len());
        for s in &self.slaves {
            let r: f64 = played
                .iter()
                .zip(&s.point)
                .zip(gradient)
                .map(|((w, u), g)| (w - u) * g)
                .sum();
            surrogate.push(-s.eta * r + s.eta * s.eta * r * r);
        }

        // Master: exponential weights on the surrogate losses.
        let mixed: Vec<f64> = self
            .log_master
            .iter()
            .zip(&surrogate)
            .map(|(l, s)| l - s)
            .collect();
        let old_norm = log_sum_exp(&self.log_master);
        let new_norm = log_sum_exp(&mixed);
        let mix_loss = old_norm - new_norm;
        self.log_master = mixed.iter().map(|l| l - new_norm).collect();

        if norm > 0.0 {
            let g = DVector::from_column_slice(gradient);
            let ggt = &g * g.transpose();
            for s in &mut self.slaves {
                let eta = s.eta;
                // grad of s^eta at the slave point: eta g (1 + 2 eta <g, w_i - w_t>)
                let drift: f64 = s
                    .point
                    .iter()
                    .zip(&played)
                    .zip(gradient)
                    .map(|((u, w), gi)| (u - w) * gi)
                    .sum();
                let surrogate_grad = &g * (eta * (1.0 + 2.0 * eta * drift));
                s.precision += &ggt * (2.0 * eta * eta);
                // keep the matrix exactly symmetric
                s.precision = (&s.precision + s.precision.transpose()) * 0.5;
                let step = s
                    .precision
                    .clone()
                    .cholesky()
                    .expect("precision stays SPD")
                    .solve(&surrogate_grad);
                let candidate: Vec<f64> =
                    s.point.iter().zip(step.iter()).map(|(u, st)| u - st).collect();
                s.point = project_mahalanobis(&candidate, &s.precision, &self.domain)?;
            }
        }
        self.t += 1;
        Ok(MetaGradRound {
            played,
            slave_points,
            master,
            surrogate,
            mix_loss,
        })
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Surrogate loss `-eta r + eta^2 r^2` with `r = <w_t - u, g_t>`.
pub fn surrogate_loss(eta: f64, played: &[f64], u: &[f64], gradient: &[f64]) -> f64 {
    let r: f64 = played
        .iter()
        .zip(u)
        .zip(gradient)
        .map(|((w, v), g)| (w - v) * g)
        .sum();
    -eta * r + eta * eta * r * r
}
