use crate::error::{ensure, Result};

/// Largest `eta` for which the Bernstein-to-central conversion is valid.
pub const CENTRAL_ETA_LIMIT: f64 = 1.79328;

/// Upper bound on `epsilon(eta)` implied by the `(B, kappa)`-Bernstein
/// condition.
///
/// For `kappa` in `(0, 1)` it is the supremum over `x >= 0` of
/// `B eta x^kappa - x`, capped at `x = 1`.
pub fn central_bound(b: f64, kappa: f64, eta: f64) -> Result<f64> {
    ensure!(b > 0.0 && b.is_finite(), "Bernstein constant must be positive, got {b}");
    ensure!((0.0..=1.0).contains(&kappa), "kappa {kappa} outside [0, 1]");
    ensure!(eta >= 0.0, "eta must be nonnegative, got {eta}");
    Ok(if kappa == 0.0 {
        eta * b
    } else if kappa == 1.0 {
        (eta * b - 1.0).max(0.0)
    } else if b * kappa * eta <= 1.0 {
        (1.0 - kappa) / kappa * (b * eta * kappa).powf(1.0 / (1.0 - kappa))
    } else {
        eta * b - 1.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!((central_bound(1.0, 0.5, 0.1).unwrap() - 0.0025).abs() < 1e-15);
        assert_eq!(central_bound(2.0, 0.0, 0.3).unwrap(), 0.6);
        assert_eq!(central_bound(1.0, 1.0, 0.9).unwrap(), 0.0);
        assert!((central_bound(2.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(central_bound(0.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn small_kappa_approaches_linear() {
        let at = central_bound(1.0, 1e-3, 0.5).unwrap();
        assert!((at - 0.5).abs() / 0.5 < 0.02, "{at}");
    }

    #[test]
    fn continuous_at_the_cap() {
        // at B kappa eta = 1 both branches give eta B - 1 = (1 - kappa)/kappa
        let (b, kappa): (f64, f64) = (2.0, 0.25);
        let eta = 1.0 / (b * kappa);
        let inside = (1.0 - kappa) / kappa * (b * eta * kappa).powf(1.0 / (1.0 - kappa));
        assert!((inside - (eta * b - 1.0)).abs() < 1e-12);
        let below = central_bound(b, kappa, eta - 1e-9).unwrap();
        let above = central_bound(b, kappa, eta + 1e-9).unwrap();
        assert!((below - above).abs() < 1e-7);
    }
}
