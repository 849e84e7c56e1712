use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// A finitely supported law of an excess loss `x in [-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDist {
    atoms: Vec<(f64, f64)>,
}

impl FiniteDist {
    /// Atoms are `(value, probability)` pairs. Zero-probability atoms are
    /// dropped.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        ensure!(!atoms.is_empty(), "distribution needs at least one atom");
        let mut total = 0.0;
        for &(v, p) in &atoms {
            ensure!(
                v.is_finite() && (-1.0..=1.0).contains(&v),
                "atom value {v} outside [-1, 1]"
            );
            ensure!(p.is_finite() && p >= 0.0, "atom probability {p} is negative");
            total += p;
        }
        ensure!((total - 1.0).abs() <= 1e-12, "probabilities sum to {total}");
        let atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|a| a.1 > 0.0).collect();
        ensure!(!atoms.is_empty(), "distribution has no mass");
        Ok(FiniteDist { atoms })
    }

    /// Point mass at `v`.
    pub fn point(v: f64) -> Result<Self> {
        Self::new(vec![(v, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * v * p).sum()
    }

    /// `ln E[exp(f(x))]`, evaluated with log-sum-exp.
    pub fn log_mgf_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        let exps: Vec<f64> = self.atoms.iter().map(|(v, _)| f(*v)).collect();
        let max = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + self
            .atoms
            .iter()
            .zip(&exps)
            .map(|((_, p), e)| p * (e - max).exp())
            .sum::<f64>()
            .ln()
    }
}

/// Moments of a finite law of an arbitrary real variable (used by the ESI
/// checks, where values are not restricted to `[-1, 1]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDist {
    pub atoms: Vec<(f64, f64)>,
}

impl RealDist {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        ensure!(!atoms.is_empty(), "distribution needs at least one atom");
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        ensure!(
            atoms.iter().all(|a| a.0.is_finite() && a.1 >= 0.0),
            "atoms must be finite with nonnegative mass"
        );
        ensure!((total - 1.0).abs() <= 1e-12, "probabilities sum to {total}");
        Ok(RealDist { atoms })
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    pub fn exp_moment(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| p * v.exp()).sum()
    }

    pub fn tail(&self, threshold: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 >= threshold).map(|a| a.1).sum()
    }
}
