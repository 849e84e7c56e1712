use serde::{Deserialize, Serialize};

use crate::environments::{ExcessLaw, ExcessSamples};
use crate::error::{Error, Result};

/// Floor on `E[x]` in `E[x^2] / E[x]^kappa`.
pub const MEAN_FLOOR: f64 = 1e-12;

/// Smallest valid `B` at each `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinProfile {
    pub kappas: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard error of each value (Monte-Carlo only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
    /// Predictor attaining each value.
    pub argmax: Vec<String>,
    /// Predictors left out at each `kappa`: the risk minimizer in exact mode,
    /// and in Monte-Carlo mode those whose mean is not resolved at 3 sigma.
    pub excluded: Vec<usize>,
}

fn ratio(m1: f64, m2: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        m2
    } else {
        m2 / m1.max(MEAN_FLOOR).powf(kappa)
    }
}

/// Exact profile. Predictors with zero second moment (the minimizer)
/// satisfy every condition and are excluded from the supremum.
pub fn bernstein_profile_exact(laws: &[ExcessLaw], kappas: &[f64]) -> BernsteinProfile {
    let mut values = Vec::with_capacity(kappas.len());
    let mut argmax = Vec::with_capacity(kappas.len());
    let mut excluded = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let (mut best, mut label, mut skipped) = (0.0, String::new(), 0);
        for law in laws {
            let m2 = law.dist.second_moment();
            if m2 == 0.0 {
                skipped += 1;
                continue;
            }
            let r = ratio(law.dist.mean(), m2, kappa);
            if r > best {
                best = r;
                label = law.label.clone();
            }
        }
        values.push(best);
        argmax.push(label);
        excluded.push(skipped);
    }
    BernsteinProfile {
        kappas: kappas.to_vec(),
        values,
        std_errors: None,
        argmax,
        excluded,
    }
}

/// Sample moments of one predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub n: usize,
    pub mean: f64,
    pub second: f64,
    pub mean_se: f64,
    // sample variances and covariance of (x, x^2)
    var1: f64,
    var2: f64,
    cov12: f64,
}

impl MomentEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
        for &x in xs {
            let x2 = x * x;
            s1 += x;
            s2 += x2;
            s3 += x2 * x;
            s4 += x2 * x2;
        }
        let (m1, m2, m3, m4) = (s1 / n, s2 / n, s3 / n, s4 / n);
        let var1 = (m2 - m1 * m1).max(0.0);
        let var2 = (m4 - m2 * m2).max(0.0);
        MomentEstimate {
            n: xs.len(),
            mean: m1,
            second: m2,
            mean_se: (var1 / n).sqrt(),
            var1,
            var2,
            cov12: m3 - m1 * m2,
        }
    }

    /// `E[x^2] / E[x]^kappa` and its delta-method standard error.
    pub fn ratio(&self, kappa: f64) -> (f64, f64) {
        let n = self.n as f64;
        if kappa == 0.0 {
            return (self.second, (self.var2 / n).sqrt());
        }
        let m1 = self.mean.max(MEAN_FLOOR);
        let r = self.second / m1.powf(kappa);
        let d2 = 1.0 / m1.powf(kappa);
        let d1 = -kappa * self.second / m1.powf(kappa + 1.0);
        let var = (d1 * d1 * self.var1 + d2 * d2 * self.var2 + 2.0 * d1 * d2 * self.cov12) / n;
        (r, var.max(0.0).sqrt())
    }
}

/// Per-predictor Monte-Carlo ratio with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub label: String,
    pub ratio: f64,
    pub std_error: f64,
    pub resolved: bool,
}

/// Monte-Carlo ratios of every predictor at one `kappa`. A predictor whose
/// mean is below `-4` standard errors means the minimizer was misidentified.
pub fn mc_ratios(samples: &ExcessSamples, kappa: f64) -> Result<Vec<RatioEstimate>> {
    let mut out = Vec::with_capacity(samples.samples.len());
    for (label, xs) in samples.labels.iter().zip(&samples.samples) {
        let m = MomentEstimate::from_samples(xs);
        if m.mean < -4.0 * m.mean_se {
            return Err(Error::DataInconsistency(format!(
                "predictor {label} has mean excess loss {} ({} standard errors below 0)",
                m.mean,
                -m.mean / m.mean_se
            )));
        }
        let resolved = kappa == 0.0 || m.mean > 3.0 * m.mean_se;
        let (ratio, std_error) = m.ratio(kappa);
        out.push(RatioEstimate {
            label: label.clone(),
            ratio,
            std_error,
            resolved,
        });
    }
    Ok(out)
}

/// Monte-Carlo profile: the supremum over resolved predictors.
pub fn bernstein_profile_mc(samples: &ExcessSamples, kappas: &[f64]) -> Result<BernsteinProfile> {
    let mut values = Vec::new();
    let mut errors = Vec::new();
    let mut argmax = Vec::new();
    let mut excluded = Vec::new();
    for &kappa in kappas {
        let ratios = mc_ratios(samples, kappa)?;
        let best = ratios
            .iter()
            .filter(|r| r.resolved)
            .max_by(|a, b| a.ratio.total_cmp(&b.ratio));
        values.push(best.map_or(0.0, |r| r.ratio));
        errors.push(best.map_or(0.0, |r| r.std_error));
        argmax.push(best.map_or_else(String::new, |r| r.label.clone()));
        excluded.push(ratios.iter().filter(|r| !r.resolved).count());
    }
    Ok(BernsteinProfile {
        kappas: kappas.to_vec(),
        values,
        std_errors: Some(errors),
        argmax,
        excluded,
    })
}
