//! Convex domains and projections in a Mahalanobis metric.
//!
//! `project_mahalanobis` returns `argmin_{u in domain} (u - p)^T A (u - p)`
//! for a symmetric positive definite `A`. The ball case reduces, in the
//! eigenbasis of `A`, to a one-dimensional search for the Lagrange multiplier
//! of the norm constraint. The box case is not separable under a full
//! matrix and is solved by an active-set Newton method, which terminates
//! with the exact KKT point up to rounding.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Feasible set of an OCO problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Domain {
    /// Euclidean ball of the given radius around the origin.
    Ball { dim: usize, radius: f64 },
    /// Axis-aligned box `lo <= u <= hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        ensure!(dim >= 1, "ball dimension must be >= 1");
        ensure!(radius > 0.0 && radius.is_finite(), "ball radius {radius} must be > 0");
        Ok(Domain::Ball { dim, radius })
    }

    pub fn unit_box(dim: usize) -> Result<Self> {
        Self::boxed(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        ensure!(!lo.is_empty() && lo.len() == hi.len(), "box bounds mismatch");
        ensure!(
            lo.iter().zip(&hi).all(|(l, h)| l <= h && l.is_finite() && h.is_finite()),
            "box bounds must satisfy lo <= hi"
        );
        Ok(Domain::Box { lo, hi })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { dim, .. } => *dim,
            Domain::Box { lo, .. } => lo.len(),
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        match self {
            Domain::Ball { dim, .. } => vec![0.0; *dim],
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
        }
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (h - l) * (h - l))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Euclidean distance from `u` to the domain (0 inside).
    pub fn distance(&self, u: &[f64]) -> f64 {
        match self {
            Domain::Ball { radius, .. } => {
                let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                (n - radius).max(0.0)
            }
            Domain::Box { lo, hi } => u
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| {
                    let d = (l - v).max(v - h).max(0.0);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        u.len() == self.dim() && self.distance(u) <= tol
    }
}

fn check_spd(precision: &DMatrix<f64>) -> Result<()> {
    ensure!(precision.is_square(), "precision must be square");
    let n = precision.nrows();
    let scale = precision.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            ensure!(
                (precision[(i, j)] - precision[(j, i)]).abs() <= 1e-12 * scale,
                "precision is not symmetric"
            );
        }
    }
    if precision.clone().cholesky().is_none() {
        return Err(Error::Contract("precision is not positive definite".into()));
    }
    Ok(())
}

/// Projects `point` onto `domain` in the norm induced by `precision`.
pub fn project_mahalanobis(
    point: &[f64],
    precision: &DMatrix<f64>,
    domain: &Domain,
) -> Result<Vec<f64>> {
    ensure!(
        point.len() == domain.dim() && precision.nrows() == domain.dim(),
        "dimension mismatch between point, precision and domain"
    );
    check_spd(precision)?;
    if domain.contains(point, 0.0) {
        return Ok(point.to_vec());
    }
    match domain {
        Domain::Ball { radius, .. } => Ok(project_ball(point, precision, *radius)),
        Domain::Box { lo, hi } => Ok(project_box(point, precision, lo, hi)),
    }
}

fn project_ball(point: &[f64], precision: &DMatrix<f64>, radius: f64) -> Vec<f64> {
    let eig = SymmetricEigen::new(precision.clone());
    let p = DVector::from_column_slice(point);
    let coords = eig.eigenvectors.transpose() * &p;
    let lambdas = &eig.eigenvalues;
    let norm_at = |mu: f64| -> f64 {
        coords
            .iter()
            .zip(lambdas.iter())
            .map(|(c, l)| {
                let v = l * c / (l + mu);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    };
    // ||u(mu)|| is decreasing in mu; at this upper end it is <= radius.
    let l_max = lambdas.iter().cloned().fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut hi = l_max * p.norm() / radius;
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shrunk = DVector::from_iterator(
        coords.len(),
        coords.iter().zip(lambdas.iter()).map(|(c, l)| l * c / (l + hi)),
    );
    let mut u = &eig.eigenvectors * shrunk;
    let n = u.norm();
    if n > radius {
        u *= radius / n;
    }
    u.iter().cloned().collect()
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Bound {
    Free,
    Lower,
    Upper,
}

fn project_box(point: &[f64], a: &DMatrix<f64>, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = point.len();
    let p = DVector::from_column_slice(point);
    let mut u = DVector::from_iterator(n, (0..n).map(|i| point[i].clamp(lo[i], hi[i])));
    let mut state: Vec<Bound> = (0..n)
        .map(|i| {
            if point[i] < lo[i] {
                Bound::Lower
            } else if point[i] > hi[i] {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();
    let scale = a.amax() * (1.0 + p.amax());
    for _ in 0..(50 * n + 50) {
        let grad = a * (&u - &p);
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == Bound::Free).collect();
        let mut step = None;
        if !free.is_empty() {
            let sub = DMatrix::from_fn(free.len(), free.len(), |r, c| a[(free[r], free[c])]);
            let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| -grad[i]));
            let delta = sub
                .cholesky()
                .map(|ch| ch.solve(&rhs))
                .expect("principal submatrix of an SPD matrix is SPD");
            if delta.amax() > 1e-15 * (1.0 + u.amax()) {
                step = Some(delta);
            }
        }
        match step {
            Some(delta) => {
                // Longest feasible fraction of the Newton step.
                let mut alpha = 1.0;
                let mut blocking = None;
                for (r, &i) in free.iter().enumerate() {
                    let d = delta[r];
                    let limit = if d < 0.0 {
                        (lo[i] - u[i]) / d
                    } else if d > 0.0 {
                        (hi[i] - u[i]) / d
                    } else {
                        f64::INFINITY
                    };
                    if limit < alpha {
                        alpha = limit.max(0.0);
                        blocking = Some((i, d < 0.0));
                    }
                }
                for (r, &i) in free.iter().enumerate() {
                    u[i] = (u[i] + alpha * delta[r]).clamp(lo[i], hi[i]);
                }
                if let Some((i, lower)) = blocking {
                    u[i] = if lower { lo[i] } else { hi[i] };
                    state[i] = if lower { Bound::Lower } else { Bound::Upper };
                }
            }
            None => {
                // Stationary on the free set: release the most violated bound.
                let mut worst = None;
                let mut worst_val = 1e-13 * scale;
                for i in 0..n {
                    let violation = match state[i] {
                        Bound::Lower => -grad[i],
                        Bound::Upper => grad[i],
                        Bound::Free => continue,
                    };
                    if violation > worst_val {
                        worst_val = violation;
                        worst = Some(i);
                    }
                }
                match worst {
                    Some(i) => state[i] = Bound::Free,
                    None => break,
                }
            }
        }
    }
    u.iter().cloned().collect()
}
