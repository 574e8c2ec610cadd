//! Geo-indistinguishability for location-based services.
//!
//! Planar Laplace noise with a calibrated privacy level for finite-precision
//! and truncated outputs, retrieval-radius sizing for a target accuracy, and
//! a Bayesian harness to evaluate mechanisms on a grid of regions.
//!
//! Distances are in kilometres and ε is per kilometre throughout.

pub mod accuracy;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod kernel;
pub mod mechanism;
pub mod numerics;

pub use error::{Error, Result};
pub use geometry::{AdmissibleRegion, GridSpec, LocalProjection, Location, LocationTuple};
pub use kernel::MechanismMatrix;
pub use mechanism::{PlanarLaplace, PrecisionParams, PrivacyParams, RngStream};
pub use numerics::{Epsilon, Probability};
