//! Shared domain types and regret/variance accounting.
//!
//! Hedge rounds are accounted against a fixed comparator expert, OCO rounds
//! through the linearized regret `<w_t - u, g_t>`. In both cases the trace
//! keeps the cumulative second-order term `V_t`, the sum of squared
//! instantaneous regrets, alongside the regret itself.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Tolerance used when validating that a probability vector sums to one.
pub const PMF_TOLERANCE: f64 = 1e-9;

/// Per-round losses of all experts, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ensure!(!values.is_empty(), "loss vector must not be empty");
        for (k, &v) in values.iter().enumerate() {
            ensure!(
                (0.0..=1.0).contains(&v),
                "loss of expert {k} is {v}, outside [0,1]"
            );
        }
        Ok(LossVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// A probability mass function over a finite index set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        ensure!(!probabilities.is_empty(), "pmf must not be empty");
        let mut total = 0.0;
        for (k, &p) in probabilities.iter().enumerate() {
            ensure!(p.is_finite() && p >= 0.0, "pmf entry {k} is {p}");
            total += p;
        }
        ensure!(
            (total - 1.0).abs() <= PMF_TOLERANCE,
            "pmf sums to {total}, not 1"
        );
        Ok(Pmf(probabilities))
    }

    /// Normalizes nonnegative weights into a pmf.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        ensure!(
            total.is_finite() && total > 0.0,
            "weights must have a positive finite sum, got {total}"
        );
        Pmf::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        ensure!(n > 0, "uniform pmf needs at least one atom");
        Ok(Pmf(vec![1.0 / n as f64; n]))
    }

    /// The prior `1/(k(k+1))` over `k = 1..n`, renormalized to the truncation.
    pub fn harmonic(n: usize) -> Result<Self> {
        ensure!(n > 0, "harmonic pmf needs at least one atom");
        Pmf::from_weights((1..=n).map(|k| 1.0 / (k as f64 * (k as f64 + 1.0))).collect())
    }

    /// Builds a pmf from unnormalized log-weights with log-sum-exp.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        ensure!(!log_weights.is_empty(), "pmf must not be empty");
        let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ensure!(max.is_finite(), "log-weights must contain a finite maximum");
        let weights: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
        Pmf::from_weights(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Expected value of `values` under the pmf.
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

/// The data behind one OCO round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossEvent {
    /// Hinge loss on the unit ball, `1 - y <x, u>` with `|x| <= 1`.
    Hinge { x: Vec<f64>, y: i8 },
    /// Absolute loss `|u - x|` on `[0, 1]`.
    Absolute { x: f64 },
    /// Mean coordinate-wise absolute loss `sum_k |u_k - b_k| / d` with fair
    /// coin bits `b_k`; every point of the box is a risk minimizer.
    Coins { bits: Vec<u8> },
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

impl LossEvent {
    pub fn dim(&self) -> usize {
        match self {
            LossEvent::Hinge { x, .. } => x.len(),
            LossEvent::Absolute { .. } => 1,
            LossEvent::Coins { bits } => bits.len(),
        }
    }

    /// Loss of the point `u`.
    pub fn loss(&self, u: &[f64]) -> f64 {
        match self {
            LossEvent::Hinge { x, y } => {
                let margin: f64 = x.iter().zip(u).map(|(a, b)| a * b).sum();
                (1.0 - f64::from(*y) * margin).max(0.0)
            }
            LossEvent::Absolute { x } => (u[0] - x).abs(),
            LossEvent::Coins { bits } => {
                let scale = bits.len() as f64;
                bits.iter()
                    .zip(u)
                    .map(|(&b, &v)| (v - f64::from(b)).abs())
                    .sum::<f64>()
                    / scale
            }
        }
    }

    /// A subgradient of the loss at `u`.
    ///
    /// On the unit ball the hinge is never active, so its gradient is `-y x`
    /// everywhere; the absolute loss uses the subgradient 0 at `u = x`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        match self {
            LossEvent::Hinge { x, y } => x.iter().map(|v| -f64::from(*y) * v).collect(),
            LossEvent::Absolute { x } => vec![sign(u[0] - x)],
            LossEvent::Coins { bits } => {
                let scale = bits.len() as f64;
                bits.iter()
                    .zip(u)
                    .map(|(&b, &v)| sign(v - f64::from(b)) / scale)
                    .collect()
            }
        }
    }
}

/// One stored point of a regret trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub learner_cum_loss: f64,
    pub comparator_cum_loss: f64,
    pub regret: f64,
    pub v: f64,
}

/// Which rounds of a run are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointPolicy {
    /// `t in {1, 2, 4, 8, ...} ∪ {T}`.
    #[default]
    Geometric,
    EveryRound,
}

impl CheckpointPolicy {
    pub fn is_checkpoint(self, t: u64, horizon: u64) -> bool {
        match self {
            CheckpointPolicy::Geometric => t.is_power_of_two() || t == horizon,
            CheckpointPolicy::EveryRound => true,
        }
    }
}

/// Increments produced by accounting for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundIncrement {
    pub learner_loss: f64,
    pub comparator_loss: f64,
    pub regret: f64,
    pub v: f64,
}

/// Cumulative learner loss, comparator loss, regret and `V_t` of one run.
///
/// For OCO runs the two loss columns hold linearized losses `<w_t, g_t>` and
/// `<u, g_t>`, so that `regret = learner - comparator` is the linearized
/// regret.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub horizon: u64,
    pub policy: CheckpointPolicy,
    pub checkpoints: Vec<Checkpoint>,
    // expert count or dimension, fixed by the first round
    #[serde(default)]
    width: usize,
    t: u64,
    learner: f64,
    comparator: f64,
    v: f64,
}

impl RegretTrace {
    pub fn new(horizon: u64, policy: CheckpointPolicy) -> Self {
        RegretTrace {
            horizon,
            policy,
            checkpoints: Vec::new(),
            width: 0,
            t: 0,
            learner: 0.0,
            comparator: 0.0,
            v: 0.0,
        }
    }

    /// Rounds accounted so far.
    pub fn rounds(&self) -> u64 {
        self.t
    }

    pub fn regret(&self) -> f64 {
        self.learner - self.comparator
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    /// Final regret (at the last stored checkpoint).
    pub fn final_regret(&self) -> f64 {
        self.last().map_or(0.0, |c| c.regret)
    }

    fn lock_width(&mut self, width: usize) -> Result<()> {
        ensure!(
            self.width == 0 || self.width == width,
            "round has width {width}, earlier rounds had {}",
            self.width
        );
        self.width = width;
        Ok(())
    }

    fn push(&mut self, learner_loss: f64, comparator_loss: f64, r: f64) -> RoundIncrement {
        self.t += 1;
        self.learner += learner_loss;
        self.comparator += comparator_loss;
        self.v += r * r;
        if self.policy.is_checkpoint(self.t, self.horizon) {
            self.checkpoints.push(Checkpoint {
                t: self.t,
                learner_cum_loss: self.learner,
                comparator_cum_loss: self.comparator,
                regret: self.learner - self.comparator,
                v: self.v,
            });
        }
        RoundIncrement {
            learner_loss,
            comparator_loss,
            regret: r,
            v: r * r,
        }
    }

    /// Accounts a Hedge round: the learner suffers `<w, l>`, the comparator
    /// expert suffers `l[k]`.
    pub fn accumulate_hedge(
        &mut self,
        weights: &Pmf,
        losses: &LossVector,
        comparator: usize,
    ) -> Result<RoundIncrement> {
        ensure!(
            weights.len() == losses.len(),
            "weights have length {}, losses {}",
            weights.len(),
            losses.len()
        );
        ensure!(
            comparator < losses.len(),
            "comparator {comparator} out of range for {} experts",
            losses.len()
        );
        self.lock_width(losses.len())?;
        let h = weights.dot(losses.as_slice());
        let l = losses.as_slice()[comparator];
        Ok(self.push(h, l, h - l))
    }

    /// Accounts an OCO round through the linearized regret `<w - u, g>`.
    pub fn accumulate_oco(
        &mut self,
        point: &[f64],
        gradient: &[f64],
        comparator: &[f64],
    ) -> Result<RoundIncrement> {
        ensure!(
            point.len() == gradient.len() && point.len() == comparator.len(),
            "dimension mismatch: point {}, gradient {}, comparator {}",
            point.len(),
            gradient.len(),
            comparator.len()
        );
        self.lock_width(point.len())?;
        let learner = dot(point, gradient);
        let other = dot(comparator, gradient);
        let r = point
            .iter()
            .zip(comparator)
            .zip(gradient)
            .map(|((w, u), g)| (w - u) * g)
            .sum::<f64>();
        Ok(self.push(learner, other, r))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Identifies a run; equal keys reproduce bit-identical traces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub env_id: String,
    pub algo_id: String,
    pub horizon: u64,
    pub seed: u64,
}

impl RunKey {
    pub fn run_id(&self) -> String {
        format!("{}|{}|{}|{}", self.env_id, self.algo_id, self.horizon, self.seed)
    }
}
