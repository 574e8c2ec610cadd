//! Location-based service proxy: POIs are fetched around a perturbed
//! location within an enlarged radius, then filtered back to the user's
//! area of interest.

pub mod error;
pub mod provider;
pub mod proxy;
pub mod service;
pub mod store;

pub use error::{LbsError, Result};
pub use provider::{
    HttpProvider, HttpProviderConfig, PoiProvider, ProviderRequest, RecordingProvider, ReplayTransport,
    ReqwestTransport, Transport,
};
pub use proxy::{BudgetStatus, LbsQuery, LbsResponse, PoiHit, PrivacySpec, Proxy};
pub use service::{router, serve, serve_on, ServiceState};
pub use store::{PoiRecord, PoiStore};
