//! Bayesian updates and the multiplicative distance between distributions.

use crate::error::{Error, Result};
use crate::kernel::MechanismMatrix;

use super::world::Prior;

/// `σ(x) = K(x)(Z)π(x) / Σ_{x′} K(x′)(Z)π(x′)` for an observed set `Z` of
/// reported indices.
pub fn bayes_posterior(prior: &Prior, k: &MechanismMatrix, obs: &[usize]) -> Result<Prior> {
    Prior::new(posterior_weights(prior.weights(), k, obs)?)
}

pub(crate) fn posterior_weights(prior: &[f64], k: &MechanismMatrix, obs: &[usize]) -> Result<Vec<f64>> {
    if prior.len() != k.n_rows() {
        return Err(Error::LengthMismatch {
            left: prior.len(),
            right: k.n_rows(),
        });
    }
    if obs.iter().any(|&z| z >= k.n_cols()) {
        return Err(Error::invalid("observation", "reported index out of range"));
    }
    let joint: Vec<f64> = prior
        .iter()
        .enumerate()
        .map(|(x, &p)| p * k.prob_of_set(x, obs))
        .collect();
    let total: f64 = joint.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroProbabilityObservation);
    }
    let mut post: Vec<f64> = joint.into_iter().map(|j| j / total).collect();
    // absorb rounding so the result passes the prior invariant
    let s: f64 = post.iter().sum();
    post.iter_mut().for_each(|v| *v /= s);
    Ok(post)
}

/// `d_P(p, q) = sup_S |ln p(S)/q(S)|`, with `|ln 0/0| = 0` and `|ln a/0| = ∞`.
///
/// The ratio of two sums never exceeds the largest ratio of their terms,
/// so the supremum is attained on a single element: the one with the most
/// extreme ratio in either direction.
pub fn mult_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut best: f64 = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        match (a > 0.0, b > 0.0) {
            (false, false) => {}
            (true, true) => best = best.max((a / b).ln().abs()),
            _ => return Ok(f64::INFINITY),
        }
    }
    Ok(best)
}

/// Exhaustive supremum over all non-empty subsets. Exponential; meant as an
/// oracle for small supports (at most 20 elements).
pub fn mult_distance_exhaustive(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.len() > 20 {
        return Err(Error::domain("exhaustive subset search limited to 20 elements"));
    }
    let n = p.len();
    let mut best: f64 = 0.0;
    for mask in 1u32..(1 << n) {
        let (mut ps, mut qs) = (0.0, 0.0);
        for i in 0..n {
            if mask & (1 << i) != 0 {
                ps += p[i];
                qs += q[i];
            }
        }
        let v = match (ps > 0.0, qs > 0.0) {
            (false, false) => 0.0,
            (true, true) => (ps / qs).ln().abs(),
            _ => f64::INFINITY,
        };
        best = best.max(v);
    }
    Ok(best)
}
