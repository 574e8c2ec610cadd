//! Special functions behind the radial law of the planar Laplacian.
//!
//! The radius of a planar Laplace draw follows a gamma distribution with
//! shape 2 and scale 1/ε. Its cdf is
//!
//! ```text
//! C_ε(r) = 1 − (1 + εr) e^{−εr}
//! ```
//!
//! and the quantile function is expressed through the −1 branch of the
//! Lambert W function:
//!
//! ```text
//! C_ε^{-1}(p) = −(W_{−1}((p − 1)/e) + 1) / ε
//! ```

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / E;
const MAX_HALLEY_STEPS: usize = 50;
const MAX_BISECTION_STEPS: usize = 2000;
/// Absolute residual accepted for `w·e^w = y`.
pub const LAMBERT_RESIDUAL_TOL: f64 = 1e-12;
/// Arguments this far below −1/e are treated as the branch point (rounding noise).
const BRANCH_SLACK: f64 = 4.0 * f64::EPSILON;

/// Privacy level per unit of distance (per km unless stated otherwise).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Epsilon(value))
        } else {
            Err(Error::domain(format!("epsilon must be finite and > 0, got {value}")))
        }
    }

    /// ε = ℓ / r: privacy level ℓ enjoyed within radius r.
    pub fn from_level(level: f64, radius: f64) -> Result<Self> {
        if !(level > 0.0 && radius > 0.0) {
            return Err(Error::domain(format!(
                "level and radius must be > 0, got level={level}, radius={radius}"
            )));
        }
        Epsilon::new(level / radius)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Same privacy level re-expressed for distances measured in units
    /// `factor` times larger (e.g. `factor = 1000` converts per-m to per-km).
    pub fn rescale(self, factor: f64) -> Result<Self> {
        Epsilon::new(self.0 * factor)
    }
}

impl TryFrom<f64> for Epsilon {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Epsilon::new(v)
    }
}

impl From<Epsilon> for f64 {
    fn from(e: Epsilon) -> f64 {
        e.0
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A probability in `[0, 1)`: the range of the uniform draw feeding the
/// quantile function, which keeps every sampled radius finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!("probability must lie in [0, 1), got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Probability::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Lower branch W_{−1} of the Lambert W function.
///
/// Solves `w·e^w = y` for `w ≤ −1`, defined on `−1/e ≤ y < 0`. Halley
/// iteration from a series guess (near the branch point) or the asymptotic
/// expansion (near zero); falls back to bisection if Halley leaves the
/// branch or misses the residual tolerance.
pub fn lambert_w_m1(y: f64) -> Result<f64> {
    if !y.is_finite() || y >= 0.0 || y < -INV_E - BRANCH_SLACK {
        return Err(Error::domain(format!(
            "W_-1 is defined on [-1/e, 0), got {y}"
        )));
    }
    if y <= -INV_E {
        return Ok(-1.0);
    }

    if let Some(w) = halley(y) {
        if residual(w, y) <= LAMBERT_RESIDUAL_TOL {
            return Ok(w);
        }
    }
    Ok(bisect_w_m1(y))
}

fn residual(w: f64, y: f64) -> f64 {
    (w * w.exp() - y).abs()
}

fn initial_guess(y: f64) -> f64 {
    if y < -0.25 {
        // Series in p = −sqrt(2(1 + e·y)) about the branch point.
        let p = -(2.0 * (1.0 + E * y)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l1 = (-y).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    }
}

fn halley(y: f64) -> Option<f64> {
    let mut w = initial_guess(y);
    for _ in 0..MAX_HALLEY_STEPS {
        let ew = w.exp();
        let f = w * ew - y;
        if f == 0.0 {
            return Some(w);
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            return None;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        let step = f / denom;
        let next = (w - step).min(-1.0);
        if !next.is_finite() {
            return None;
        }
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * w.abs();
        w = next;
        if done {
            return Some(w);
        }
    }
    Some(w)
}

fn bisect_w_m1(y: f64) -> f64 {
    // g(w) = w·e^w − y is decreasing on (−∞, −1]; g(−1) ≤ 0 < g(lo).
    let t = -(-y).ln();
    let mut lo = -2.0 * t - 2.0;
    let mut hi = -1.0;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid * mid.exp() - y > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if residual(lo, y) < residual(hi, y) {
        lo
    } else {
        hi
    }
}

/// Radial cdf `C_ε(r) = 1 − (1 + εr)e^{−εr}`.
///
/// The result is a plain `f64` because it reaches 1.0 in floating point for
/// large radii.
pub fn gamma_cdf(eps: Epsilon, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("radius must be >= 0, got {r}")));
    }
    let x = eps.value() * r;
    if x.is_infinite() {
        return Ok(1.0);
    }
    // 1 − (1+x)e^{−x} = −expm1(−x) − x·e^{−x}
    Ok((-(-x).exp_m1() - x * (-x).exp()).clamp(0.0, 1.0))
}

/// Survival function `1 − C_ε(r) = (1 + εr)e^{−εr}`, without cancellation.
pub fn gamma_sf(eps: Epsilon, r: f64) -> f64 {
    let x = eps.value() * r.max(0.0);
    if x.is_infinite() {
        return 0.0;
    }
    (1.0 + x) * (-x).exp()
}

/// Radius quantile `C_ε^{-1}(p)`.
pub fn gamma_cdf_inv(eps: Epsilon, p: Probability) -> Result<f64> {
    let p = p.value();
    if p == 0.0 {
        return Ok(0.0);
    }
    let w = lambert_w_m1((p - 1.0) / E)?;
    Ok((-(w + 1.0) / eps.value()).max(0.0))
}

/// Convenience wrapper validating a raw `f64` probability.
pub fn radius_quantile(eps: Epsilon, p: f64) -> Result<f64> {
    gamma_cdf_inv(eps, Probability::new(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(v: f64) -> Epsilon {
        Epsilon::new(v).unwrap()
    }

    // Oracle: plain bisection on w e^w = y over (−50, −1).
    fn bisection_oracle(y: f64) -> f64 {
        let (mut lo, mut hi) = (-50.0f64, -1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambert_branch_point() {
        assert_eq!(lambert_w_m1(-1.0 / E).unwrap(), -1.0);
    }

    #[test]
    fn lambert_matches_bisection_oracle() {
        // frozen from the oracle: −3.577152063957297, −6.472775124394005
        let w1 = lambert_w_m1(-0.1).unwrap();
        let w2 = lambert_w_m1(-0.01).unwrap();
        assert!((w1 - bisection_oracle(-0.1)).abs() < 1e-12);
        assert!((w2 - bisection_oracle(-0.01)).abs() < 1e-12);
        assert!((w1 + 3.577152).abs() < 1e-6);
        assert!((w2 + 6.472775).abs() < 1e-6);
    }

    #[test]
    fn lambert_domain_errors() {
        assert!(lambert_w_m1(0.0).is_err());
        assert!(lambert_w_m1(0.1).is_err());
        assert!(lambert_w_m1(-0.5).is_err());
        assert!(lambert_w_m1(f64::NAN).is_err());
    }

    #[test]
    fn lambert_tiny_arguments() {
        for &y in &[-1e-10, -1e-100, -1e-300] {
            let w = lambert_w_m1(y).unwrap();
            assert!(w < -1.0);
            assert!(residual(w, y) < LAMBERT_RESIDUAL_TOL);
        }
        let w = lambert_w_m1(-1e-10).unwrap();
        assert!((w - bisection_oracle(-1e-10)).abs() < 1e-9);
    }

    #[test]
    fn bisection_fallback_agrees_with_halley() {
        for i in 1..100 {
            let y = -INV_E * i as f64 / 100.0;
            let a = lambert_w_m1(y).unwrap();
            let b = bisect_w_m1(y);
            assert!((a - b).abs() < 1e-9 * a.abs(), "y={y} halley={a} bisect={b}");
        }
    }

    #[test]
    fn cdf_examples() {
        let e = eps(4f64.ln() / 0.2);
        assert_eq!(gamma_cdf(e, 0.0).unwrap(), 0.0);
        assert!((gamma_cdf(e, 1.0).unwrap() - 0.992).abs() < 1e-3);
        assert!((gamma_cdf(e, 0.2).unwrap() - 0.40343).abs() < 1e-5);
        assert!(gamma_cdf(e, -0.1).is_err());
        assert_eq!(gamma_cdf(e, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn cdf_matches_quadrature_of_radial_density() {
        // Composite Simpson of ε²ρe^{−ερ} over [0, 0.2].
        let e = 4f64.ln() / 0.2;
        let n = 2000;
        let h = 0.2 / n as f64;
        let f = |r: f64| e * e * r * (-e * r).exp();
        let mut s = f(0.0) + f(0.2);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        let simpson = s * h / 3.0;
        assert!((gamma_cdf(eps(e), 0.2).unwrap() - simpson).abs() < 1e-10);
    }

    #[test]
    fn quantile_examples() {
        let e = eps(4f64.ln() / 0.2);
        assert_eq!(radius_quantile(e, 0.0).unwrap(), 0.0);
        assert!((radius_quantile(e, 0.95).unwrap() - 0.684).abs() < 1e-3);
        // (1+x)e^{−x} = 0.5 at x ≈ 1.67835
        assert!((radius_quantile(e, 0.5).unwrap() - 0.2421).abs() < 1e-4);
        assert!(radius_quantile(e, 1.0).is_err());
        assert!(radius_quantile(e, -0.01).is_err());
    }

    #[test]
    fn epsilon_and_probability_validation() {
        assert!(Epsilon::new(0.0).is_err());
        assert!(Epsilon::new(-1.0).is_err());
        assert!(Epsilon::new(f64::INFINITY).is_err());
        let e = Epsilon::from_level(4f64.ln(), 0.2).unwrap();
        assert_eq!(e.value(), 4f64.ln() / 0.2);
        assert!(Probability::new(1.0).is_err());
        assert!(Probability::new(0.0).is_ok());
        let per_m = Epsilon::new(0.0162).unwrap();
        assert!((per_m.rescale(1000.0).unwrap().value() - 16.2).abs() < 1e-12);
    }

    #[test]
    fn survival_complements_cdf() {
        let e = eps(3.0);
        for i in 0..50 {
            let r = i as f64 * 0.1;
            assert!((gamma_cdf(e, r).unwrap() + gamma_sf(e, r) - 1.0).abs() < 1e-15);
        }
    }
}
