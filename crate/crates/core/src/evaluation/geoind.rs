//! Empirical verification of `K(x)(Z) ≤ e^{ε d(x,x′)} K(x′)(Z)` on finite
//! input and output spaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclid, Location};
use crate::kernel::MechanismMatrix;
use crate::mechanism::RngStream;
use crate::numerics::Epsilon;

use super::world::RegionWorld;

/// Pair and output attaining the tightest ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: usize,
    pub x_prime: usize,
    pub z: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoIndReport {
    pub eps: f64,
    /// `max |ln K(x)(z)/K(x′)(z)| / d(x, x′)` over pairs and singletons.
    pub eps_hat: f64,
    pub passes: bool,
    /// Number of (pair, singleton) combinations above `eps·(1 + tol)`.
    pub violations: usize,
    pub worst: Option<Witness>,
}

fn log_ratio(a: f64, b: f64) -> f64 {
    match (a > 0.0, b > 0.0) {
        (false, false) => 0.0,
        (true, true) => (a / b).ln().abs(),
        _ => f64::INFINITY,
    }
}

/// Check every pair of inputs against every singleton output. On a finite
/// output space this is sufficient: a ratio of sums never exceeds the
/// largest ratio of its terms.
///
/// Distinct inputs at distance zero must have identical rows.
pub fn check_geoind_with<D>(k: &MechanismMatrix, dist: D, eps: Epsilon, tol: f64) -> GeoIndReport
where
    D: Fn(usize, usize) -> f64,
{
    let limit = eps.value() * (1.0 + tol);
    let mut eps_hat: f64 = 0.0;
    let mut worst = None;
    let mut violations = 0;
    let n = k.n_rows();
    for x in 0..n {
        for xp in x + 1..n {
            let d = dist(x, xp);
            for z in 0..k.n_cols() {
                let lr = log_ratio(k.get(x, z), k.get(xp, z));
                let ratio = if lr == 0.0 {
                    0.0
                } else if d > 0.0 {
                    lr / d
                } else {
                    f64::INFINITY
                };
                if ratio > limit {
                    violations += 1;
                }
                if ratio > eps_hat || worst.is_none() && ratio >= eps_hat {
                    eps_hat = ratio;
                    worst = Some(Witness {
                        x,
                        x_prime: xp,
                        z,
                        ratio,
                    });
                }
            }
        }
    }
    GeoIndReport {
        eps: eps.value(),
        eps_hat,
        passes: violations == 0,
        violations,
        worst,
    }
}

/// Rows indexed by `points` (the true locations).
pub fn check_geoind_points(k: &MechanismMatrix, points: &[Location], eps: Epsilon, tol: f64) -> Result<GeoIndReport> {
    if points.len() != k.n_rows() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: k.n_rows(),
        });
    }
    Ok(check_geoind_with(k, |i, j| euclid(points[i], points[j]), eps, tol))
}

/// Rows and columns indexed by the regions of `world`, with relative
/// tolerance `1e-9`.
pub fn check_geoind(k: &MechanismMatrix, world: &RegionWorld, eps: Epsilon) -> Result<GeoIndReport> {
    if k.n_rows() != world.n_regions() {
        return Err(Error::LengthMismatch {
            left: k.n_rows(),
            right: world.n_regions(),
        });
    }
    Ok(check_geoind_with(k, |i, j| world.distance(i, j), eps, 1e-9))
}

/// Largest `|ln K(x)(Z)/K(x′)(Z)| / d(x, x′)` over `count` random output
/// sets `Z`. Never exceeds the singleton figure; useful as a cross-check.
pub fn spot_check_subsets<D>(k: &MechanismMatrix, dist: D, count: usize, rng: &mut RngStream) -> f64
where
    D: Fn(usize, usize) -> f64,
{
    let n = k.n_rows();
    let m = k.n_cols();
    let mut best: f64 = 0.0;
    for _ in 0..count {
        let keep = 0.05 + 0.9 * rng.uniform();
        let set: Vec<usize> = (0..m).filter(|_| rng.uniform() < keep).collect();
        if set.is_empty() {
            continue;
        }
        let mass: Vec<f64> = (0..n).map(|x| k.prob_of_set(x, &set)).collect();
        for x in 0..n {
            for xp in x + 1..n {
                let lr = log_ratio(mass[x], mass[xp]);
                if lr > 0.0 {
                    let d = dist(x, xp);
                    best = best.max(if d > 0.0 { lr / d } else { f64::INFINITY });
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(v: f64) -> Epsilon {
        Epsilon::new(v).unwrap()
    }

    #[test]
    fn identity_fails_with_infinite_estimate() {
        let w = RegionWorld::default_world();
        let r = check_geoind(&MechanismMatrix::identity(81), &w, eps(1e6)).unwrap();
        assert!(!r.passes);
        assert_eq!(r.eps_hat, f64::INFINITY);
    }

    #[test]
    fn identical_rows_pass_at_zero() {
        let w = RegionWorld::default_world();
        let k = MechanismMatrix::constant_rows(81, vec![1.0 / 81.0; 81]).unwrap();
        let r = check_geoind(&k, &w, eps(1e-300)).unwrap();
        assert!(r.passes);
        assert_eq!(r.eps_hat, 0.0);
    }

    #[test]
    fn two_point_exact_estimate() {
        // rows (0.6, 0.4) and (0.4, 0.6) at distance 2: ε̂ = ln(1.5)/2
        let k = MechanismMatrix::new(vec![vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
        let pts = [Location::new(0.0, 0.0), Location::new(2.0, 0.0)];
        let r = check_geoind_points(&k, &pts, eps(0.25), 0.0).unwrap();
        assert!((r.eps_hat - 1.5f64.ln() / 2.0).abs() < 1e-15);
        assert!(r.passes);
        let r = check_geoind_points(&k, &pts, eps(0.2), 0.0).unwrap();
        assert!(!r.passes);
        assert_eq!(r.violations, 2);
    }

    #[test]
    fn subsets_never_exceed_singletons() {
        let k = MechanismMatrix::new(vec![
            vec![0.5, 0.3, 0.2],
            vec![0.2, 0.5, 0.3],
            vec![0.1, 0.3, 0.6],
        ])
        .unwrap();
        let dist = |i: usize, j: usize| (i as f64 - j as f64).abs();
        let single = check_geoind_with(&k, dist, eps(10.0), 0.0).eps_hat;
        let sub = spot_check_subsets(&k, dist, 500, &mut RngStream::new(3));
        assert!(sub <= single + 1e-12);
    }
}
