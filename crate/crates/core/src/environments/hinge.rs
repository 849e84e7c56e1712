//! Hinge loss on the unit ball with features uniform on the sphere.
//!
//! Because `|<x, u>| <= 1` the hinge never clips, the loss is linear,
//! `1 - y <x, u>`, and its gradient is `-y x`. The risk minimizer is
//! `u* = mu / |mu|` with `mu = E[y x]`, and the Bernstein constant is
//! `2 lambda_max / |mu|` where `lambda_max = 1/d` for the uniform sphere.
//! `|mu|` is estimated once by Monte Carlo.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algorithms::Domain;
use crate::error::{ensure, Error, Result};
use crate::seed::{derive_seed, stream, SeedLabel};
use crate::types::LossEvent;

use super::{Best, EnvOracle, OcoGeometry};

/// Monte-Carlo sample size for `|mu|`.
pub const MU_SAMPLES: usize = 1_000_000;

/// Constant of the noiseless-sphere bound `B <= c / sqrt(d)`.
pub const NOISELESS_CONSTANT: f64 = 8.0 / 0.35;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LabelModel {
    /// `y = sign(<u_bar, x>)`.
    #[default]
    Noiseless,
    /// `P(y = +1 | x) = 1 / (1 + exp(-scale <u_bar, x>))`. Not one of the
    /// textbook examples; it exercises `|mu| < E|<u_bar, x>|`.
    Logistic { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HingeParams {
    pub d: usize,
    #[serde(default)]
    pub labels: LabelModel,
    /// Unit normal of the labelling hyperplane; defaults to `e_1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_bar: Option<Vec<f64>>,
}

impl HingeParams {
    pub fn new(d: usize) -> Self {
        HingeParams {
            d,
            labels: LabelModel::Noiseless,
            u_bar: None,
        }
    }

    pub fn u_bar(&self) -> Vec<f64> {
        self.u_bar.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; self.d];
            e[0] = 1.0;
            e
        })
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.d >= 1, "hinge dimension must be >= 1");
        let u = self.u_bar();
        ensure!(u.len() == self.d, "u_bar has dimension {}, expected {}", u.len(), self.d);
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        ensure!((norm - 1.0).abs() <= 1e-9, "u_bar must have unit norm, got {norm}");
        if let LabelModel::Logistic { scale } = self.labels {
            ensure!(scale.is_finite(), "logistic scale must be finite");
        }
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        Domain::Ball {
            dim: self.d,
            radius: 1.0,
        }
    }

    pub(crate) fn sample(&self, u_bar: &[f64], rng: &mut impl Rng) -> LossEvent {
        let mut x: Vec<f64> = (0..self.d).map(|_| rng.sample(StandardNormal)).collect();
        let mut norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        while norm == 0.0 {
            x = (0..self.d).map(|_| rng.sample(StandardNormal)).collect();
            norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        for v in &mut x {
            *v /= norm;
        }
        let margin: f64 = x.iter().zip(u_bar).map(|(a, b)| a * b).sum();
        let y = match self.labels {
            LabelModel::Noiseless => {
                if margin >= 0.0 {
                    1
                } else {
                    -1
                }
            }
            LabelModel::Logistic { scale } => {
                let p = 1.0 / (1.0 + (-scale * margin).exp());
                if rng.random::<f64>() < p {
                    1
                } else {
                    -1
                }
            }
        };
        LossEvent::Hinge { x, y }
    }

    /// Monte-Carlo estimate of `|mu|` and its standard error.
    ///
    /// By symmetry `mu` is parallel to `u_bar`, so `|mu| = E[y <x, u_bar>]`,
    /// a scalar mean.
    pub fn estimate_mu_norm(&self, samples: usize, seed: u64) -> (f64, f64) {
        let u_bar = self.u_bar();
        let mut rng = stream(seed);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            if let LossEvent::Hinge { x, y } = self.sample(&u_bar, &mut rng) {
                let v = f64::from(y) * x.iter().zip(&u_bar).map(|(a, b)| a * b).sum::<f64>();
                s1 += v;
                s2 += v * v;
            }
        }
        let n = samples as f64;
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    }

    pub fn oracle(&self) -> Result<EnvOracle> {
        self.validate()?;
        let seed = derive_seed(0, &[SeedLabel::from("oracle"), SeedLabel::from("hinge"), SeedLabel::from(self.d)]);
        let (mu, se) = self.estimate_mu_norm(MU_SAMPLES, seed);
        if mu <= 3.0 * se || mu <= 0.0 {
            return Err(Error::Contract(format!(
                "degenerate label model: |mu| = {mu} is indistinguishable from 0"
            )));
        }
        let lambda_max = 1.0 / self.d as f64;
        let b = 2.0 * lambda_max / mu;
        Ok(EnvOracle {
            best: Best::Point(self.u_bar()),
            kappa: 1.0,
            bernstein_b: b,
            exact_b: Some(b),
            excess_laws: None,
            experts: None,
            geometry: Some(OcoGeometry {
                domain: self.domain(),
                diameter: 2.0,
                grad_bound: 1.0,
            }),
            mu_norm: Some((mu, se)),
        })
    }

    /// Representative points for excess-loss profiles: rotations of `u*`
    /// towards an orthogonal direction, on the sphere and at half radius.
    pub fn representative_points(&self) -> Vec<Vec<f64>> {
        let u = self.u_bar();
        if self.d == 1 {
            return vec![vec![-u[0]], vec![0.0], vec![0.5 * u[0]], vec![-0.5 * u[0]]];
        }
        // an orthonormal partner of u
        let mut e = vec![0.0; self.d];
        let j = if u[0].abs() < 0.9 { 0 } else { 1 };
        e[j] = 1.0;
        let proj: f64 = e.iter().zip(&u).map(|(a, b)| a * b).sum();
        let mut v: Vec<f64> = e.iter().zip(&u).map(|(a, b)| a - proj * b).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= n;
        }
        let mut points = Vec::new();
        for radius in [1.0, 0.5] {
            for step in 1..=8 {
                let th = std::f64::consts::PI * step as f64 / 8.0;
                points.push(
                    u.iter()
                        .zip(&v)
                        .map(|(a, b)| radius * (th.cos() * a + th.sin() * b))
                        .collect(),
                );
            }
        }
        points.push(vec![0.0; self.d]);
        points
    }
}

/// `E|X_1|` for `X` uniform on the unit sphere in `R^d`, i.e. `|mu|` of the
/// noiseless model: `Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2))`.
pub fn sphere_abs_coordinate_mean(d: usize) -> f64 {
    // ratio of gammas through the recursion Gamma(z+1) = z Gamma(z)
    let mut ratio = if d.is_multiple_of(2) {
        // Gamma(1)/Gamma(3/2) = 2/sqrt(pi)
        2.0 / std::f64::consts::PI.sqrt()
    } else {
        // Gamma(1/2)/Gamma(1) = sqrt(pi)
        std::f64::consts::PI.sqrt()
    };
    let mut z = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
    while z + 1e-9 < d as f64 / 2.0 {
        // Gamma(z+1)/Gamma(z+3/2) = (z / (z + 1/2)) Gamma(z)/Gamma(z+1/2)
        ratio *= z / (z + 0.5);
        z += 1.0;
    }
    ratio / std::f64::consts::PI.sqrt()
}
