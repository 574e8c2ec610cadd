//! Sources of POIs: the local store or an upstream nearby-search API.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{LbsError, Result};
use crate::store::{PoiRecord, PoiStore};

/// Exactly what leaves the proxy for one retrieval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub lat: f64,
    pub lon: f64,
    pub radius_m: u64,
    #[serde(rename = "type")]
    pub type_tag: String,
}

impl ProviderRequest {
    /// Coordinates are rounded to 6 decimals (about 0.1 m) and the radius
    /// is rounded up to whole metres so the disc never shrinks.
    pub fn new(lat: f64, lon: f64, radius_km: f64, type_tag: &str) -> Self {
        let round6 = |v: f64| (v * 1e6).round() / 1e6;
        // guard against 0.3 km becoming 300.00000000000006 m
        let radius_m = (radius_km * 1000.0 - 1e-6).ceil().max(0.0) as u64;
        ProviderRequest {
            lat: round6(lat),
            lon: round6(lon),
            radius_m,
            type_tag: type_tag.to_string(),
        }
    }
}

pub trait PoiProvider: Send + Sync {
    fn nearby(&self, req: &ProviderRequest) -> Result<Vec<PoiRecord>>;
}

impl PoiProvider for PoiStore {
    fn nearby(&self, req: &ProviderRequest) -> Result<Vec<PoiRecord>> {
        let tag = (!req.type_tag.is_empty()).then_some(req.type_tag.as_str());
        Ok(self
            .nearby_search_latlon(req.lat, req.lon, req.radius_m as f64 / 1000.0, tag)
            .into_iter()
            .map(|(_, r)| r.clone())
            .collect())
    }
}

/// Wraps a provider and keeps every request it forwards.
pub struct RecordingProvider<P> {
    inner: P,
    log: Mutex<Vec<ProviderRequest>>,
}

impl<P: PoiProvider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        RecordingProvider {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<ProviderRequest> {
        self.log.lock().expect("request log poisoned").clone()
    }
}

impl<P: PoiProvider> PoiProvider for RecordingProvider<P> {
    fn nearby(&self, req: &ProviderRequest) -> Result<Vec<PoiRecord>> {
        self.log.lock().expect("request log poisoned").push(req.clone());
        self.inner.nearby(req)
    }
}

/// Fetches a URL and returns the body.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<String>;
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn get(&self, url: &str) -> Result<String> {
        (**self).get(url)
    }
}

/// Blocking HTTPS transport with a fixed number of attempts.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
    attempts: u32,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration, attempts: u32) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LbsError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(ReqwestTransport {
            client,
            attempts: attempts.max(1),
        })
    }
}

impl Transport for ReqwestTransport {
    fn get(&self, url: &str) -> Result<String> {
        let mut last = String::new();
        for _ in 0..self.attempts {
            match self.client.get(url).send().and_then(|r| r.error_for_status()) {
                Ok(resp) => match resp.text() {
                    Ok(body) => return Ok(body),
                    Err(e) => last = e.without_url().to_string(),
                },
                // the URL carries the API key, keep it out of errors
                Err(e) => last = e.without_url().to_string(),
            }
        }
        Err(LbsError::Transport {
            attempts: self.attempts,
            message: last,
        })
    }
}

/// Serves recorded bodies keyed by URL; unknown URLs fail like an
/// unreachable host.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    bodies: HashMap<String, String>,
    fallback: Option<String>,
}

impl ReplayTransport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Answer every request with `body`.
    pub fn always(body: impl Into<String>) -> Self {
        ReplayTransport {
            bodies: HashMap::new(),
            fallback: Some(body.into()),
        }
    }

    pub fn with(mut self, url: impl Into<String>, body: impl Into<String>) -> Self {
        self.bodies.insert(url.into(), body.into());
        self
    }
}

impl Transport for ReplayTransport {
    fn get(&self, url: &str) -> Result<String> {
        self.bodies
            .get(url)
            .or(self.fallback.as_ref())
            .cloned()
            .ok_or_else(|| LbsError::Transport {
                attempts: 1,
                message: "no recorded response".into(),
            })
    }
}

pub const NEARBY_SEARCH_URL: &str = "https://maps.googleapis.com/maps/api/place/nearbysearch/json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpProviderConfig {
    pub base_url: String,
    pub key: String,
}

impl HttpProviderConfig {
    pub fn new(key: impl Into<String>) -> Self {
        HttpProviderConfig {
            base_url: NEARBY_SEARCH_URL.to_string(),
            key: key.into(),
        }
    }
}

/// Client for a Places-style `nearbysearch` endpoint.
pub struct HttpProvider<T> {
    config: HttpProviderConfig,
    transport: T,
}

#[derive(Deserialize)]
struct SearchResponse {
    status: String,
    #[serde(default)]
    results: Vec<serde_json::Value>,
    #[serde(default)]
    error_message: Option<String>,
}

#[derive(Deserialize)]
struct PlaceResult {
    #[serde(default)]
    place_id: Option<String>,
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    name: String,
    geometry: PlaceGeometry,
    #[serde(default)]
    types: Vec<String>,
}

#[derive(Deserialize)]
struct PlaceGeometry {
    location: LatLng,
}

#[derive(Deserialize)]
struct LatLng {
    lat: f64,
    lng: f64,
}

impl<T: Transport> HttpProvider<T> {
    pub fn new(config: HttpProviderConfig, transport: T) -> Self {
        HttpProvider { config, transport }
    }

    pub fn request_url(&self, req: &ProviderRequest) -> String {
        format!(
            "{}?location={},{}&radius={}&types={}&key={}",
            self.config.base_url, req.lat, req.lon, req.radius_m, req.type_tag, self.config.key
        )
    }

    /// Parse a `nearbysearch` body. Each record's size is its JSON length.
    pub fn parse(body: &str, type_tag: &str) -> Result<Vec<PoiRecord>> {
        let resp: SearchResponse =
            serde_json::from_str(body).map_err(|e| LbsError::MalformedResponse(e.to_string()))?;
        match resp.status.as_str() {
            "OK" | "ZERO_RESULTS" => {}
            other => {
                return Err(LbsError::MalformedResponse(format!(
                    "status {other}{}",
                    resp.error_message.map(|m| format!(": {m}")).unwrap_or_default()
                )))
            }
        }
        resp.results
            .into_iter()
            .enumerate()
            .map(|(i, raw)| {
                let size_kb = raw.to_string().len() as f64 / 1024.0;
                let place: PlaceResult = serde_json::from_value(raw)
                    .map_err(|e| LbsError::MalformedResponse(format!("result {i}: {e}")))?;
                let tag = if type_tag.is_empty() {
                    place.types.first().cloned().unwrap_or_default()
                } else {
                    type_tag.to_string()
                };
                Ok(PoiRecord {
                    id: place.place_id.or(place.id).unwrap_or_else(|| format!("result-{i}")),
                    lat: place.geometry.location.lat,
                    lon: place.geometry.location.lng,
                    type_tag: tag,
                    name: place.name,
                    size_kb: Some(size_kb),
                })
            })
            .collect()
    }
}

impl<T: Transport> PoiProvider for HttpProvider<T> {
    fn nearby(&self, req: &ProviderRequest) -> Result<Vec<PoiRecord>> {
        let body = self.transport.get(&self.request_url(req))?;
        Self::parse(&body, &req.type_tag)
    }
}
