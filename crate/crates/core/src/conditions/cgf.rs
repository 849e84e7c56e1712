use serde::{Deserialize, Serialize};

use crate::environments::{EnvOracle, ExcessSamples};
use crate::error::{Error, Result};

use super::FiniteDist;

/// Upper end of the default profile grid.
pub const ETA_MAX: f64 = 1.79;

/// Normalized cumulant generating function `(1/eta) ln E[exp(-eta x)]`,
/// with its limit `-E[x]` at `eta = 0`.
pub fn exact_cgf(dist: &FiniteDist, eta: f64) -> f64 {
    if eta == 0.0 {
        return -dist.mean();
    }
    dist.log_mgf_of(|x| -eta * x) / eta
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// 64 log-spaced points in `[2^-12, 1.79]`.
pub fn default_eta_grid() -> Vec<f64> {
    log_grid(64, 2f64.powi(-12), ETA_MAX)
}

/// `epsilon(eta)` of one predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorCurve {
    pub label: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
}

/// Worst-case `epsilon(eta)` over a set of predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgfProfile {
    pub eta_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard error of each envelope value (Monte-Carlo profiles only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
    pub per_f: Vec<PredictorCurve>,
}

/// Exact profile from the oracle's excess laws.
pub fn cgf_profile(oracle: &EnvOracle, etas: &[f64]) -> Result<CgfProfile> {
    let laws = oracle
        .excess_laws
        .as_ref()
        .ok_or_else(|| Error::Unsupported("oracle has no exact excess laws".into()))?;
    let per_f: Vec<PredictorCurve> = laws
        .iter()
        .map(|law| PredictorCurve {
            label: law.label.clone(),
            values: etas.iter().map(|&eta| exact_cgf(&law.dist, eta)).collect(),
            std_errors: None,
        })
        .collect();
    let values = (0..etas.len())
        .map(|i| per_f.iter().map(|c| c.values[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(CgfProfile {
        eta_grid: etas.to_vec(),
        values,
        std_errors: None,
        per_f,
    })
}

/// Monte-Carlo profile from sampled excess losses.
///
/// The sampled predictors exclude the risk minimizer, whose curve is 0
/// exactly; the envelope includes that 0. The standard error of
/// `(1/eta) ln m` with `m` the sample mean of `exp(-eta x)` is
/// `sd(exp(-eta x)) / (eta m sqrt(n))` by the delta method.
pub fn mc_cgf_profile(samples: &ExcessSamples, etas: &[f64]) -> CgfProfile {
    let mut per_f = Vec::with_capacity(samples.samples.len());
    for (label, xs) in samples.labels.iter().zip(&samples.samples) {
        let n = xs.len() as f64;
        let mut values = Vec::with_capacity(etas.len());
        let mut errors = Vec::with_capacity(etas.len());
        for &eta in etas {
            if eta == 0.0 {
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                values.push(-mean);
                errors.push((var / n).sqrt());
                continue;
            }
            let (mut s1, mut s2) = (0.0, 0.0);
            for &x in xs {
                let e = (-eta * x).exp();
                s1 += e;
                s2 += e * e;
            }
            let m = s1 / n;
            let var = (s2 / n - m * m).max(0.0);
            values.push(m.ln() / eta);
            errors.push((var / n).sqrt() / (eta * m));
        }
        per_f.push(PredictorCurve {
            label: label.clone(),
            values,
            std_errors: Some(errors),
        });
    }
    let mut values = vec![0.0; etas.len()];
    let mut std_errors = vec![0.0; etas.len()];
    for i in 0..etas.len() {
        for c in &per_f {
            if c.values[i] > values[i] {
                values[i] = c.values[i];
                std_errors[i] = c.std_errors.as_ref().expect("mc curve")[i];
            }
        }
    }
    CgfProfile {
        eta_grid: etas.to_vec(),
        values,
        std_errors: Some(std_errors),
        per_f,
    }
}
