use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Args;
use geoind_core::accuracy::AccuracySpec;
use geoind_core::{LocalProjection, RngStream};
use geoind_lbs::provider::NEARBY_SEARCH_URL;
use geoind_lbs::proxy::DEFAULT_AREA_SIDE_KM;
use geoind_lbs::{
    HttpProvider, HttpProviderConfig, LbsQuery, PoiProvider, PoiStore, PrivacySpec, Proxy, ReqwestTransport,
    ServiceState,
};

use crate::args::{open_path, parse_latlon, PrivacyArgs};
use crate::error::{CliError, CliResult};

/// Where POIs come from and which area the proxy serves.
#[derive(Debug, Clone, Args)]
pub struct ProxyArgs {
    /// POI file (CSV or JSON lines).
    #[arg(long, env = "GEOIND_STORE")]
    pub store: Option<PathBuf>,
    /// Centre of the service area as LAT,LON; defaults to the store's mean.
    #[arg(long, value_parser = parse_latlon)]
    pub center: Option<(f64, f64)>,
    /// Side of the square service area, km.
    #[arg(long, default_value_t = DEFAULT_AREA_SIDE_KM)]
    pub area_side: f64,
    /// Upstream nearby-search endpoint; used instead of the store when set
    /// (or when a key is given).
    #[arg(long, env = "GEOIND_PROVIDER_URL")]
    pub provider_url: Option<String>,
    #[arg(long, env = "GEOIND_PROVIDER_KEY", hide_env_values = true)]
    pub provider_key: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub timeout_ms: u64,
    #[arg(long, default_value_t = 3)]
    pub attempts: u32,
}

impl ProxyArgs {
    pub fn build(&self) -> CliResult<Proxy> {
        let upstream = self.provider_url.is_some() || self.provider_key.is_some();
        let store = match &self.store {
            Some(p) if !upstream => Some(PoiStore::load(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?),
            _ => None,
        };
        let projection = match (self.center, &store) {
            (Some((lat, lon)), _) => LocalProjection::new(lat, lon),
            (None, Some(s)) if !s.is_empty() => s.projection(),
            _ => return Err(CliError::domain("--center is required without a non-empty --store")),
        };
        let provider: Arc<dyn PoiProvider> = match store {
            Some(s) => Arc::new(s),
            None if upstream => {
                let config = HttpProviderConfig {
                    base_url: self.provider_url.clone().unwrap_or_else(|| NEARBY_SEARCH_URL.to_string()),
                    key: self.provider_key.clone().unwrap_or_default(),
                };
                let transport = ReqwestTransport::new(Duration::from_millis(self.timeout_ms), self.attempts)?;
                Arc::new(HttpProvider::new(config, transport))
            }
            None => return Err(CliError::domain("give --store or --provider-url/--provider-key")),
        };
        Ok(Proxy::with_area(provider, projection, self.area_side)?)
    }
}

/// Run one private query and print the response as JSON.
#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub proxy: ProxyArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub lat: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lon: f64,
    #[arg(long = "type", default_value = "restaurant")]
    pub poi_type: String,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[arg(long, default_value_t = 0.3)]
    pub rad_i: f64,
    #[arg(long, env = "GEOIND_SEED")]
    pub seed: u64,
    /// Stream id; the service uses the same id to pick the same stream.
    #[arg(long, default_value_t = 0)]
    pub request_id: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn query(a: &QueryArgs) -> CliResult<()> {
    let proxy = a.proxy.build()?;
    let q = LbsQuery {
        lat: a.lat,
        lon: a.lon,
        poi_type: a.poi_type.clone(),
        privacy: PrivacySpec::Epsilon {
            epsilon: a.privacy.epsilon()?.value(),
        },
        accuracy: AccuracySpec::new(a.confidence, a.rad_i)?,
        request_id: Some(a.request_id),
    };
    let resp = proxy.query(&q, &mut RngStream::new(a.seed).fork(a.request_id))?;
    let mut w = open_path(a.output.as_ref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&resp)?)?;
    w.flush()?;
    Ok(())
}

/// Run the proxy as a local HTTP service.
#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub proxy: ProxyArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, env = "GEOIND_SEED")]
    pub seed: u64,
}

pub fn serve(a: &ServeArgs) -> CliResult<()> {
    // built outside the runtime: the blocking HTTP client owns its own
    let proxy = a.proxy.build()?;
    let state = ServiceState::new(proxy, a.seed);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.addr).await?;
        println!("listening on {}", listener.local_addr()?);
        std::io::stdout().flush()?;
        geoind_lbs::serve_on(listener, state).await
    })?;
    Ok(())
}
