//! Location privacy (LP) and service quality loss (SQL).
//!
//! LP is the expected distance between the true region and the guess of a
//! Bayesian adversary who knows the prior and remaps every reported region
//! optimally. SQL is the expected distance between the true and reported
//! regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::MechanismMatrix;

use super::world::{Prior, RegionWorld};

fn check_shapes(prior: &Prior, k: &MechanismMatrix, world: &RegionWorld) -> Result<()> {
    let n = world.n_regions();
    if prior.len() != n || k.n_rows() != n || k.n_cols() != n {
        return Err(Error::invalid(
            "evaluation input",
            format!(
                "world has {n} regions, prior {} weights, matrix {}x{}",
                prior.len(),
                k.n_rows(),
                k.n_cols()
            ),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpReport {
    pub lp: f64,
    /// Adversary's guess for every reported region.
    pub remap: Vec<usize>,
}

/// Expected adversary error `Σ_r' Σ_r π(r)K(r)(r′)·d(r̂, r)` when the
/// reported `r′` is guessed as `r̂ = h(r′)`.
pub fn expected_error(prior: &Prior, k: &MechanismMatrix, world: &RegionWorld, remap: &[usize]) -> Result<f64> {
    check_shapes(prior, k, world)?;
    let n = world.n_regions();
    if remap.len() != n || remap.iter().any(|&g| g >= n) {
        return Err(Error::invalid("remap", "must map regions to regions"));
    }
    let mut total = 0.0;
    for (z, &guess) in remap.iter().enumerate() {
        for (r, &p) in prior.weights().iter().enumerate() {
            total += p * k.get(r, z) * world.distance(guess, r);
        }
    }
    Ok(total)
}

/// Cost `Σ_r π(r)K(r)(z)·d(g, r)` of guessing `g` after observing `z`.
fn guess_cost(prior: &Prior, k: &MechanismMatrix, world: &RegionWorld, z: usize, g: usize) -> f64 {
    prior
        .weights()
        .iter()
        .enumerate()
        .map(|(r, &p)| p * k.get(r, z) * world.distance(g, r))
        .sum()
}

/// Optimal deterministic remap; ties resolve to the lowest region index.
/// Deterministic remaps are optimal among randomized ones since the
/// objective is linear in `h`.
///
/// Reports that never occur (every guess costs zero) are left unchanged.
pub fn optimal_remap(prior: &Prior, k: &MechanismMatrix, world: &RegionWorld) -> Result<Vec<usize>> {
    check_shapes(prior, k, world)?;
    let n = world.n_regions();
    Ok((0..n)
        .map(|z| {
            let observed = prior.weights().iter().enumerate().any(|(r, &p)| p * k.get(r, z) > 0.0);
            if !observed {
                return z;
            }
            let mut best = (f64::INFINITY, 0);
            for g in 0..n {
                let c = guess_cost(prior, k, world, z, g);
                if c < best.0 {
                    best = (c, g);
                }
            }
            best.1
        })
        .collect())
}

pub fn lp(prior: &Prior, k: &MechanismMatrix, world: &RegionWorld) -> Result<LpReport> {
    let remap = optimal_remap(prior, k, world)?;
    let lp = expected_error(prior, k, world, &remap)?;
    Ok(LpReport { lp, remap })
}

/// `Σ π(r)K(r)(r′)·d(r′, r)`.
pub fn sql(prior: &Prior, k: &MechanismMatrix, world: &RegionWorld) -> Result<f64> {
    let identity: Vec<usize> = (0..world.n_regions()).collect();
    expected_error(prior, k, world, &identity)
}
