//! The private query pipeline: perturb, enlarge, fetch, filter.

use std::sync::{Arc, Mutex};

use geoind_core::accuracy::{aor_radius, AccuracySpec};
use geoind_core::geometry::euclid;
use geoind_core::{AdmissibleRegion, Epsilon, GridSpec, LocalProjection, Location, PlanarLaplace, PrecisionParams, PrivacyParams, RngStream};
use serde::{Deserialize, Serialize};

use crate::error::{LbsError, Result};
use crate::provider::{PoiProvider, ProviderRequest};
use crate::store::PoiRecord;

/// Privacy as sent by clients: either `{"epsilon": ..}` (per km) or
/// `{"level": .., "radius": ..}` meaning ε = level / radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrivacySpec {
    Epsilon { epsilon: f64 },
    Level { level: f64, radius: f64 },
}

impl PrivacySpec {
    pub fn params(&self) -> Result<PrivacyParams> {
        Ok(match *self {
            PrivacySpec::Epsilon { epsilon } => PrivacyParams::new(Epsilon::new(epsilon)?),
            PrivacySpec::Level { level, radius } => PrivacyParams::from_level(level, radius)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbsQuery {
    /// True position in degrees. Never forwarded upstream.
    pub lat: f64,
    pub lon: f64,
    pub poi_type: String,
    pub privacy: PrivacySpec,
    pub accuracy: AccuracySpec,
    /// Selects the RNG stream in service mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiHit {
    #[serde(flatten)]
    pub record: PoiRecord,
    /// Distance from the true location, km.
    pub distance_km: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetStatus {
    pub queries: u64,
    /// Sum of the ε spent so far; n·ε when every query uses the same ε.
    pub composed_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbsResponse {
    pub reported_lat: f64,
    pub reported_lon: f64,
    /// Reported point in plane coordinates, km.
    pub reported_location: Location,
    pub rad_r_km: f64,
    pub eps: f64,
    pub sampling_eps: f64,
    pub pois: Vec<PoiHit>,
    pub fetched_count: usize,
    pub kept_count: usize,
    pub bandwidth_estimate_kb: f64,
    pub overhead_kb: f64,
    /// False when the area of interest is not inside the retrieved disc;
    /// `pois` may then be incomplete.
    pub aoi_covered: bool,
    pub budget: BudgetStatus,
}

/// Running count of released locations.
#[derive(Debug, Default)]
pub struct BudgetLedger {
    inner: Mutex<BudgetStatus>,
}

impl BudgetLedger {
    pub fn record(&self, eps: f64) -> BudgetStatus {
        let mut b = self.inner.lock().expect("budget ledger poisoned");
        b.queries += 1;
        b.composed_eps += eps;
        *b
    }

    pub fn status(&self) -> BudgetStatus {
        *self.inner.lock().expect("budget ledger poisoned")
    }
}

/// Default reporting grid: 1 m.
pub const DEFAULT_GRID_KM: f64 = 0.001;

/// Default service area: a square of this side centred on the projection
/// origin.
pub const DEFAULT_AREA_SIDE_KM: f64 = 40.0;

/// Runs private queries against one provider over a fixed service area.
///
/// The area (and so the truncation region) is fixed up front: deriving it
/// from the query would make the reported point depend on more than the
/// true location and the noise.
pub struct Proxy {
    projection: LocalProjection,
    region: AdmissibleRegion,
    precision: PrecisionParams,
    provider: Arc<dyn PoiProvider>,
    budget: BudgetLedger,
}

impl Proxy {
    pub fn new(
        provider: Arc<dyn PoiProvider>,
        projection: LocalProjection,
        region: AdmissibleRegion,
        precision: PrecisionParams,
    ) -> Self {
        Proxy {
            projection,
            region,
            precision,
            provider,
            budget: BudgetLedger::default(),
        }
    }

    /// Square service area of `side` km about `projection`'s origin, 1 m grid.
    pub fn with_area(provider: Arc<dyn PoiProvider>, projection: LocalProjection, side: f64) -> Result<Self> {
        let h = side / 2.0;
        let region = AdmissibleRegion::rect(Location::new(-h, -h), Location::new(h, h))?;
        let grid = GridSpec::square(DEFAULT_GRID_KM)?;
        Ok(Self::new(provider, projection, region, PrecisionParams::double(grid)))
    }

    pub fn projection(&self) -> LocalProjection {
        self.projection
    }

    pub fn region(&self) -> &AdmissibleRegion {
        &self.region
    }

    pub fn budget(&self) -> BudgetStatus {
        self.budget.status()
    }

    /// Retrieval radius for a query; a function of (ε, c, rad_I) and the
    /// proxy's fixed precision only.
    pub fn retrieval_radius(&self, q: &LbsQuery) -> Result<f64> {
        Ok(aor_radius(self.mechanism(q)?.sampling_eps(), &q.accuracy)?)
    }

    fn mechanism(&self, q: &LbsQuery) -> Result<PlanarLaplace> {
        Ok(PlanarLaplace::new(q.privacy.params()?, self.precision, self.region)?)
    }

    pub fn query(&self, q: &LbsQuery, rng: &mut RngStream) -> Result<LbsResponse> {
        if !(q.lat.is_finite() && q.lon.is_finite() && (-90.0..=90.0).contains(&q.lat)) {
            return Err(LbsError::InvalidQuery(format!("bad coordinates ({}, {})", q.lat, q.lon)));
        }
        q.accuracy.validate()?;
        let mech = self.mechanism(q)?;
        let x = self.projection.to_plane(q.lat, q.lon);
        if !self.region.contains(x) {
            return Err(LbsError::InvalidQuery("location outside the service area".into()));
        }
        // ε′ ≤ ε, so sizing with ε′ keeps the confidence guarantee
        let rad_r = aor_radius(mech.sampling_eps(), &q.accuracy)?;
        let z = mech.sample(x, rng)?;
        let (z_lat, z_lon) = self.projection.to_latlon(z);

        let req = ProviderRequest::new(z_lat, z_lon, rad_r, &q.poi_type);
        tracing::info!(lat = req.lat, lon = req.lon, radius_m = req.radius_m, "upstream request");
        let fetched = self.provider.nearby(&req)?;

        // what was actually requested, after rounding
        let z_req = self.projection.to_plane(req.lat, req.lon);
        let aoi_covered = euclid(x, z_req) + q.accuracy.rad_i <= req.radius_m as f64 / 1000.0;

        let fetched_count = fetched.len();
        let total_kb: f64 = fetched.iter().map(PoiRecord::payload_size_kb).sum();
        let mut pois: Vec<PoiHit> = fetched
            .into_iter()
            .filter_map(|record| {
                let d = euclid(x, self.projection.to_plane(record.lat, record.lon));
                (d <= q.accuracy.rad_i).then_some(PoiHit { record, distance_km: d })
            })
            .collect();
        pois.sort_by(|a, b| a.distance_km.total_cmp(&b.distance_km).then_with(|| a.record.id.cmp(&b.record.id)));
        let kept_kb: f64 = pois.iter().map(|h| h.record.payload_size_kb()).sum();

        let budget = self.budget.record(mech.params().eps.value());
        Ok(LbsResponse {
            reported_lat: z_lat,
            reported_lon: z_lon,
            reported_location: z,
            rad_r_km: rad_r,
            eps: mech.params().eps.value(),
            sampling_eps: mech.sampling_eps().value(),
            kept_count: pois.len(),
            pois,
            fetched_count,
            bandwidth_estimate_kb: total_kb,
            overhead_kb: total_kb - kept_kb,
            aoi_covered,
            budget,
        })
    }
}
