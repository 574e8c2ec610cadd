//! Randomized harnesses for the two Bayesian characterizations of
//! geo-indistinguishability.
//!
//! Hiding: for any hiding function `φ`, prior `π` and observation `Z`,
//! `d_P(Bayes(π, K, Z), Bayes(π, K∘φ, Z)) ≤ 2ε·d(φ)` where
//! `d(φ) = max_x d(x, φ(x))`.
//!
//! Informed adversary: for any set `N`, `d_P(π|N, σ|N) ≤ ε·d(N)` where
//! `σ = Bayes(π, K, Z)` and `d(N)` is the diameter of `N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::MechanismMatrix;
use crate::mechanism::RngStream;
use crate::numerics::Epsilon;

use super::bayes::{mult_distance, posterior_weights};
use super::world::{restrict, RegionWorld};

/// Allowed excess over the bound, relative and absolute, for rounding.
const REL_TOL: f64 = 1e-9;
const ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub trials: usize,
    /// Trials whose observation had positive probability.
    pub evaluated: usize,
    pub violations: usize,
    /// Largest `d_P / bound` seen over trials with a positive bound.
    pub max_ratio: f64,
    /// Largest `d_P` seen when the bound was zero.
    pub max_distance_at_zero_bound: f64,
}

impl CharacterizationReport {
    pub fn passes(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, distance: f64, bound: f64) {
        self.evaluated += 1;
        if distance > bound * (1.0 + REL_TOL) + ABS_TOL {
            self.violations += 1;
        }
        if bound > 0.0 {
            self.max_ratio = self.max_ratio.max(distance / bound);
        } else {
            self.max_distance_at_zero_bound = self.max_distance_at_zero_bound.max(distance);
        }
    }
}

fn check_square(k: &MechanismMatrix, world: &RegionWorld) -> Result<()> {
    if k.n_rows() != world.n_regions() || k.n_cols() != world.n_regions() {
        return Err(Error::invalid("mechanism", "matrix must be regions x regions"));
    }
    Ok(())
}

/// Random prior: exponential weights on a random support of at least one
/// region.
pub fn random_prior(n: usize, rng: &mut RngStream) -> Vec<f64> {
    let keep = rng.uniform();
    let forced = rng.below(n);
    let mut w: Vec<f64> = (0..n)
        .map(|i| {
            if i == forced || rng.uniform() < keep {
                -(1.0 - rng.uniform()).ln()
            } else {
                0.0
            }
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Non-empty random subset of `0..n`.
pub fn random_subset(n: usize, rng: &mut RngStream) -> Vec<usize> {
    let keep = rng.uniform();
    let mut set: Vec<usize> = (0..n).filter(|_| rng.uniform() < keep).collect();
    if set.is_empty() {
        set.push(rng.below(n));
    }
    set
}

fn displacement(world: &RegionWorld, phi: &[usize]) -> f64 {
    phi.iter()
        .enumerate()
        .map(|(x, &y)| world.distance(x, y))
        .fold(0.0, f64::max)
}

/// `(d_P, 2ε·d(φ))` for one hiding function, or `None` when `Z` has zero
/// probability under either kernel.
fn hiding_instance(
    k: &MechanismMatrix,
    world: &RegionWorld,
    eps: f64,
    prior: &[f64],
    phi: &[usize],
    obs: &[usize],
) -> Result<Option<(f64, f64)>> {
    let k_phi = k.precompose(phi)?;
    let a = match posterior_weights(prior, k, obs) {
        Ok(p) => p,
        Err(Error::ZeroProbabilityObservation) => return Ok(None),
        Err(e) => return Err(e),
    };
    let b = match posterior_weights(prior, &k_phi, obs) {
        Ok(p) => p,
        Err(Error::ZeroProbabilityObservation) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some((mult_distance(&a, &b)?, 2.0 * eps * displacement(world, phi))))
}

pub fn check_characterization_hiding(
    k: &MechanismMatrix,
    world: &RegionWorld,
    eps: Epsilon,
    trials: usize,
    rng: &mut RngStream,
) -> Result<CharacterizationReport> {
    check_square(k, world)?;
    let n = world.n_regions();
    let mut report = CharacterizationReport {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        let prior = random_prior(n, rng);
        let obs = random_subset(n, rng);
        // mostly local hiding functions, sometimes arbitrary ones
        let radius = if rng.uniform() < 0.5 { 1 } else { world.rows().max(world.cols()) };
        let phi: Vec<usize> = (0..n).map(|x| random_neighbor(world, x, radius, rng)).collect();
        if let Some((d, bound)) = hiding_instance(k, world, eps.value(), &prior, &phi, &obs)? {
            report.record(d, bound);
        }
    }
    Ok(report)
}

/// Uniform region within `radius` rows and columns of `x`.
fn random_neighbor(world: &RegionWorld, x: usize, radius: usize, rng: &mut RngStream) -> usize {
    let (r, c) = (x / world.cols(), x % world.cols());
    let pick = |v: usize, n: usize, rng: &mut RngStream| {
        let lo = v.saturating_sub(radius);
        let hi = (v + radius).min(n - 1);
        lo + rng.below(hi - lo + 1)
    };
    let nr = pick(r, world.rows(), rng);
    let nc = pick(c, world.cols(), rng);
    world.index(nr, nc)
}

/// Adversarial search for a hiding function maximizing `d_P / (2ε·d(φ))`.
/// Each restart draws a prior, an observation and a starting `φ`, then
/// accepts single-entry changes that increase the ratio.
pub fn hill_climb_hiding(
    k: &MechanismMatrix,
    world: &RegionWorld,
    eps: Epsilon,
    restarts: usize,
    steps: usize,
    rng: &mut RngStream,
) -> Result<CharacterizationReport> {
    check_square(k, world)?;
    let n = world.n_regions();
    let mut report = CharacterizationReport {
        trials: restarts,
        ..Default::default()
    };
    let score = |d: f64, bound: f64| if bound > 0.0 { d / bound } else { 0.0 };
    for _ in 0..restarts {
        let prior = random_prior(n, rng);
        let obs = random_subset(n, rng);
        let mut phi: Vec<usize> = (0..n).map(|x| random_neighbor(world, x, 1, rng)).collect();
        let mut current = match hiding_instance(k, world, eps.value(), &prior, &phi, &obs)? {
            Some(v) => v,
            None => continue,
        };
        for _ in 0..steps {
            let x = rng.below(n);
            let old = phi[x];
            phi[x] = rng.below(n);
            match hiding_instance(k, world, eps.value(), &prior, &phi, &obs)? {
                Some(next) if score(next.0, next.1) > score(current.0, current.1) => current = next,
                _ => phi[x] = old,
            }
        }
        report.record(current.0, current.1);
    }
    Ok(report)
}

pub fn check_characterization_informed(
    k: &MechanismMatrix,
    world: &RegionWorld,
    eps: Epsilon,
    trials: usize,
    rng: &mut RngStream,
) -> Result<CharacterizationReport> {
    check_square(k, world)?;
    let n = world.n_regions();
    let mut report = CharacterizationReport {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        let prior = random_prior(n, rng);
        let obs = random_subset(n, rng);
        let set = random_subset(n, rng);
        let post = match posterior_weights(&prior, k, &obs) {
            Ok(p) => p,
            Err(Error::ZeroProbabilityObservation) => continue,
            Err(e) => return Err(e),
        };
        let (a, b) = match (restrict(&prior, &set), restrict(&post, &set)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let d = mult_distance(&a, &b)?;
        report.record(d, eps.value() * world.set_diameter(&set));
    }
    Ok(report)
}
