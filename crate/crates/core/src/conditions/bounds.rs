use crate::error::{ensure, Result};

use super::squeezer::squeezer_c;

/// Luckiness regret bound `K/(c gamma) + T eps(2 gamma)(1 + c gamma^2) + 2K`
/// with `c = 1/(1 + sqrt(1 + 4 gamma^2))`.
///
/// `eps2g` is `epsilon(2 gamma)` and may be negative. At `gamma = 0` the
/// first term is infinite and so is the bound.
pub fn theorem_bound(k_t: f64, gamma: f64, eps2g: f64, horizon: u64) -> Result<f64> {
    ensure!(k_t >= 0.0, "K_T must be nonnegative, got {k_t}");
    ensure!(gamma >= 0.0, "gamma must be nonnegative, got {gamma}");
    ensure!(eps2g.is_finite(), "epsilon must be finite");
    if gamma == 0.0 {
        return Ok(f64::INFINITY);
    }
    let c = squeezer_c(gamma);
    Ok(k_t / (c * gamma) + horizon as f64 * eps2g * (1.0 + c * gamma * gamma) + 2.0 * k_t)
}

/// The `gamma` balancing the two leading terms of the bound under a
/// `(B, kappa)` condition. At `kappa = 1` the formula degenerates and
/// `min(1/2, 1/(4B))` is returned.
pub fn tuned_gamma(b: f64, kappa: f64, k_t: f64, horizon: u64) -> Result<f64> {
    ensure!(horizon > 0, "horizon must be positive");
    ensure!(b > 0.0, "Bernstein constant must be positive, got {b}");
    ensure!((0.0..=1.0).contains(&kappa), "kappa {kappa} outside [0, 1]");
    ensure!(k_t >= 0.0, "K_T must be nonnegative, got {k_t}");
    if kappa == 1.0 {
        return Ok((0.25 / b).min(0.5));
    }
    let base = 2.0 * k_t * (1.0 - kappa) * (2.0 * b).powf(-1.0 / (1.0 - kappa)) / horizon as f64;
    Ok(base.powf((1.0 - kappa) / (2.0 - kappa)))
}

/// `(1 + 4B) (K/4)^{1/(2-kappa)} T^{(1-kappa)/(2-kappa)} + (5 - kappa) K`.
pub fn expected_regret_bound(b: f64, kappa: f64, k_t: f64, horizon: u64) -> Result<f64> {
    ensure!(b > 0.0, "Bernstein constant must be positive, got {b}");
    ensure!((0.0..=1.0).contains(&kappa), "kappa {kappa} outside [0, 1]");
    ensure!(k_t >= 0.0, "K_T must be nonnegative, got {k_t}");
    let t = horizon as f64;
    Ok((1.0 + 4.0 * b) * (k_t / 4.0).powf(1.0 / (2.0 - kappa)) * t.powf((1.0 - kappa) / (2.0 - kappa))
        + (5.0 - kappa) * k_t)
}

/// Predicted regret exponent `(1 - kappa)/(2 - kappa)`.
pub fn rate_exponent(kappa: f64) -> f64 {
    (1.0 - kappa) / (2.0 - kappa)
}
