//! The Planar Laplace mechanism.
//!
//! A draw is taken in polar form around the true location: the angle is
//! uniform on `[0, 2π)` and the radius is gamma(2, 1/ε), obtained by
//! inverting its cdf. The perturbed point is then remapped to the closest
//! point of the admissible region that lies on the reporting grid.
//!
//! Finite machine precision makes the polar draw itself discrete, which
//! weakens the guarantee. The mechanism therefore samples at a degraded
//! level ε′ chosen so that
//!
//! ```text
//! ε′ + (1/u)·ln((q + 2e^{ε′u}) / (q − 2e^{ε′u})) ≤ ε,    q = u / (r_max·δθ)
//! ```
//!
//! where `u` is the smaller grid unit, `δθ` the angular precision and
//! `r_max` the diameter of the admissible region.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{snap_to_region, AdmissibleRegion, GridSpec, Location, LocationTuple};
use crate::numerics::{gamma_cdf_inv, Epsilon, Probability};

/// Angular precision of IEEE double precision (16 significant digits).
pub const DOUBLE_PRECISION_DELTA_THETA: f64 = 1e-16;

/// Seeded uniform generator. Identical seeds (and stream ids) reproduce
/// identical draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream derived from the same seed, e.g. one per request.
    pub fn fork(&self, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        RngStream {
            seed: self.seed,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Privacy requirement: ε directly, or "level ℓ within radius r" (ε = ℓ/r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub eps: Epsilon,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_radius: Option<(f64, f64)>,
}

impl PrivacyParams {
    pub fn new(eps: Epsilon) -> Self {
        PrivacyParams {
            eps,
            level_radius: None,
        }
    }

    pub fn from_level(level: f64, radius: f64) -> Result<Self> {
        Ok(PrivacyParams {
            eps: Epsilon::from_level(level, radius)?,
            level_radius: Some((level, radius)),
        })
    }
}

/// Machine precision of the polar representation plus the reporting grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionParams {
    /// Radius precision; `None` means `r_max·δθ`, the largest value allowed.
    #[serde(default)]
    pub delta_r: Option<f64>,
    pub delta_theta: f64,
    pub grid: GridSpec,
}

impl PrecisionParams {
    /// Double-precision defaults on the given grid.
    pub fn double(grid: GridSpec) -> Self {
        PrecisionParams {
            delta_r: None,
            delta_theta: DOUBLE_PRECISION_DELTA_THETA,
            grid,
        }
    }

    /// Check `δr ≤ r_max·δθ` for the given `r_max`.
    pub fn validate(&self, r_max: f64) -> Result<()> {
        if !(self.delta_theta > 0.0 && self.delta_theta.is_finite()) {
            return Err(Error::invalid("precision", "delta_theta must be > 0"));
        }
        if let Some(dr) = self.delta_r {
            if !(dr > 0.0) || dr > r_max * self.delta_theta {
                return Err(Error::invalid(
                    "precision",
                    format!("need 0 < delta_r <= r_max*delta_theta, got {dr} > {}", r_max * self.delta_theta),
                ));
            }
        }
        Ok(())
    }
}

/// A point of the polar Laplacian relative to its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarSample {
    pub r: f64,
    pub theta: f64,
}

/// Density `ε²/(2π)·e^{−ε·d(center, at)}` of the planar Laplacian.
pub fn planar_laplace_pdf(eps: Epsilon, center: Location, at: Location) -> f64 {
    let e = eps.value();
    e * e / (2.0 * PI) * (-e * crate::geometry::euclid(center, at)).exp()
}

/// Polar sample from two uniforms in `[0, 1)`: `u_theta` for the angle and
/// `p` for the radius quantile.
pub fn polar_from_uniforms(eps: Epsilon, u_theta: f64, p: f64) -> Result<PolarSample> {
    let theta = 2.0 * PI * u_theta;
    let r = gamma_cdf_inv(eps, Probability::new(p)?)?;
    Ok(PolarSample {
        r,
        theta: if theta >= 2.0 * PI { 0.0 } else { theta },
    })
}

/// Draw `(r, θ)` from the polar Laplacian: θ uniform, r by inverse cdf.
pub fn draw_polar(eps: Epsilon, rng: &mut RngStream) -> PolarSample {
    let u_theta = rng.uniform();
    let p = rng.uniform();
    polar_from_uniforms(eps, u_theta, p).expect("uniform draws lie in [0, 1)")
}

/// Left-hand side of the discretization bound,
/// `ε′ + (1/u)·ln((q + 2e^{ε′u})/(q − 2e^{ε′u}))`, or `None` when
/// `q ≤ 2e^{ε′u}`.
pub fn discretization_bound(eps_prime: f64, u: f64, q: f64) -> Option<f64> {
    let a = 2.0 * (eps_prime * u).exp();
    if !(q > a) {
        return None;
    }
    // ln((q+a)/(q−a)) = ln1p(2a/(q−a))
    Some(eps_prime + (2.0 * a / (q - a)).ln_1p() / u)
}

/// Result of calibrating ε′ for a target ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub eps: f64,
    pub eps_prime: f64,
    pub q: f64,
    pub u: f64,
    pub r_max: f64,
    pub delta_theta: f64,
}

impl Calibration {
    /// `ε − bound(ε′) ≥ 0`; zero up to bisection resolution.
    pub fn slack(&self) -> f64 {
        self.eps - discretization_bound(self.eps_prime, self.u, self.q).unwrap_or(f64::INFINITY)
    }

    /// Smallest ε any ε′ can support at this precision, i.e. the bound at ε′→0.
    pub fn min_supported_eps(u: f64, q: f64) -> Option<f64> {
        discretization_bound(0.0, u, q)
    }
}

/// Largest ε′ whose discretization bound stays within `eps`.
///
/// Requires `r_max < u/δθ`. Fails when `q ≤ 2` (no ε′ > 0 is admissible) or
/// when `eps` is below the smallest supported level.
pub fn calibrate_eps_prime(eps: Epsilon, u: f64, r_max: f64, delta_theta: f64) -> Result<Calibration> {
    if !(u > 0.0 && r_max > 0.0 && delta_theta > 0.0) {
        return Err(Error::domain("u, r_max and delta_theta must be > 0"));
    }
    let q = u / (r_max * delta_theta);
    if !(q > 1.0) {
        return Err(Error::Infeasible {
            q,
            reason: format!("r_max = {r_max} km is not below u/delta_theta = {} km", u / delta_theta),
        });
    }
    let min_eps = match Calibration::min_supported_eps(u, q) {
        Some(m) => m,
        None => {
            return Err(Error::Infeasible {
                q,
                reason: "q <= 2: no epsilon' > 0 satisfies q > 2e^(epsilon' u)".into(),
            })
        }
    };
    if eps.value() < min_eps {
        return Err(Error::Infeasible {
            q,
            reason: format!(
                "epsilon = {} is below the smallest supported level {min_eps} at this precision",
                eps.value()
            ),
        });
    }

    // bound(ε′) is increasing in ε′ and exceeds ε′, so the root lies in
    // (0, min(ε, ln(q/2)/u)). Bisect down to adjacent floats.
    let target = eps.value();
    let mut lo = 0.0f64;
    let mut hi = target.min((q / 2.0).ln() / u);
    let feasible = |e: f64| matches!(discretization_bound(e, u, q), Some(b) if b <= target);
    if feasible(hi) {
        lo = hi;
    } else {
        for _ in 0..2000 {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                break;
            }
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    if !(lo > 0.0) {
        return Err(Error::Infeasible {
            q,
            reason: "no positive epsilon' satisfies the bound".into(),
        });
    }
    Ok(Calibration {
        eps: target,
        eps_prime: lo,
        q,
        u,
        r_max,
        delta_theta,
    })
}

/// The full mechanism PL_ε: calibrated polar Laplace noise, then remapping
/// to the closest admissible grid point.
#[derive(Debug, Clone)]
pub struct PlanarLaplace {
    params: PrivacyParams,
    precision: PrecisionParams,
    region: AdmissibleRegion,
    calibration: Calibration,
}

impl PlanarLaplace {
    pub fn new(params: PrivacyParams, precision: PrecisionParams, region: AdmissibleRegion) -> Result<Self> {
        let r_max = region.diameter();
        precision.validate(r_max)?;
        if !region.has_grid_point(&precision.grid) {
            return Err(Error::EmptyRegion);
        }
        let calibration = calibrate_eps_prime(params.eps, precision.grid.u, r_max, precision.delta_theta)?;
        Ok(PlanarLaplace {
            params,
            precision,
            region,
            calibration,
        })
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn precision(&self) -> &PrecisionParams {
        &self.precision
    }

    pub fn region(&self) -> &AdmissibleRegion {
        &self.region
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    /// The level actually used for sampling.
    pub fn sampling_eps(&self) -> Epsilon {
        Epsilon::new(self.calibration.eps_prime).expect("calibrated epsilon' is positive")
    }

    /// Perturb `x` with a given polar displacement (exposed for testing).
    pub fn apply(&self, x: Location, noise: PolarSample) -> Result<Location> {
        if !self.region.contains(x) {
            return Err(Error::OutsideRegion { x: x.x, y: x.y });
        }
        let z = x.offset_polar(noise.r, noise.theta);
        snap_to_region(z, &self.region, &self.precision.grid)
    }

    pub fn sample(&self, x: Location, rng: &mut RngStream) -> Result<Location> {
        if !self.region.contains(x) {
            return Err(Error::OutsideRegion { x: x.x, y: x.y });
        }
        let noise = draw_polar(self.sampling_eps(), rng);
        self.apply(x, noise)
    }

    /// Independent perturbation of each point. The composite enjoys
    /// (n·ε)-geo-indistinguishability with respect to d∞.
    pub fn sample_tuple(&self, xs: &LocationTuple, rng: &mut RngStream) -> Result<LocationTuple> {
        let pts = xs
            .points()
            .iter()
            .map(|&x| self.sample(x, rng))
            .collect::<Result<Vec<_>>>()?;
        LocationTuple::new(pts)
    }
}

/// One-shot PL_ε; see [`PlanarLaplace`] to amortize calibration.
pub fn planar_laplace(
    x: Location,
    params: PrivacyParams,
    prec: PrecisionParams,
    a: AdmissibleRegion,
    rng: &mut RngStream,
) -> Result<Location> {
    PlanarLaplace::new(params, prec, a)?.sample(x, rng)
}

/// A perturbed tuple together with the level it guarantees under d∞.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleRelease {
    pub points: LocationTuple,
    pub composed_eps: f64,
}

pub fn perturb_tuple(
    xs: &LocationTuple,
    params: PrivacyParams,
    prec: PrecisionParams,
    a: AdmissibleRegion,
    rng: &mut RngStream,
) -> Result<TupleRelease> {
    let mech = PlanarLaplace::new(params, prec, a)?;
    let points = mech.sample_tuple(xs, rng)?;
    Ok(TupleRelease {
        composed_eps: xs.len() as f64 * params.eps.value(),
        points,
    })
}

/// A perturbed aggregate `PL_ε(f(x))` and its guarantee `Δ·ε` for the tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRelease {
    pub location: Location,
    pub sensitivity: f64,
    pub composed_eps: f64,
}

/// Perturb an aggregate `f(x)` already computed by the caller. If `f` is
/// Δ-sensitive from d∞ to d, the release is (Δ·ε)-geo-indistinguishable
/// for the tuple. No rescaling of ε is applied.
pub fn perturb_aggregate(
    aggregate: Location,
    sensitivity: f64,
    params: PrivacyParams,
    prec: PrecisionParams,
    a: AdmissibleRegion,
    rng: &mut RngStream,
) -> Result<AggregateRelease> {
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::domain(format!("sensitivity must be > 0, got {sensitivity}")));
    }
    let location = planar_laplace(aggregate, params, prec, a, rng)?;
    Ok(AggregateRelease {
        location,
        sensitivity,
        composed_eps: sensitivity * params.eps.value(),
    })
}

/// Perturbed centroid of a tuple (Δ = 1).
pub fn perturb_centroid(
    xs: &LocationTuple,
    params: PrivacyParams,
    prec: PrecisionParams,
    a: AdmissibleRegion,
    rng: &mut RngStream,
) -> Result<AggregateRelease> {
    perturb_aggregate(xs.centroid(), 1.0, params, prec, a, rng)
}
