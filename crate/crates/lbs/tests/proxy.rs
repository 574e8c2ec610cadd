use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use geoind_core::accuracy::AccuracySpec;
use geoind_core::{LocalProjection, Location, RngStream};
use geoind_lbs::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

const X_LAT: f64 = 48.85412;
const X_LON: f64 = 2.33316;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn fixture_store() -> PoiStore {
    PoiStore::load(&fixture("pois_saint_germain.csv")).unwrap()
}

fn running_example() -> LbsQuery {
    LbsQuery {
        lat: X_LAT,
        lon: X_LON,
        poi_type: "restaurant".into(),
        privacy: PrivacySpec::Level {
            level: 4f64.ln(),
            radius: 0.2,
        },
        accuracy: AccuracySpec::new(0.95, 0.3).unwrap(),
        request_id: None,
    }
}

fn ids(hits: &[PoiHit]) -> Vec<String> {
    hits.iter().map(|h| h.record.id.clone()).collect()
}

#[test]
fn ten_poi_fixture_loads_and_every_record_is_queryable() {
    let s = fixture_store();
    assert_eq!(s.len(), 10);
    for r in s.records() {
        let hits = s.nearby_search_latlon(r.lat, r.lon, 1e-9, Some(&r.type_tag));
        assert!(hits.iter().any(|h| h.1.id == r.id), "{} not found", r.id);
    }
}

#[test]
fn json_lines_and_empty_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let jl = dir.path().join("pois.jsonl");
    let lines: Vec<String> = fixture_store()
        .records()
        .iter()
        .map(|r| serde_json::to_string(r).unwrap())
        .collect();
    std::fs::write(&jl, lines.join("\n")).unwrap();
    let s = PoiStore::load(&jl).unwrap();
    assert_eq!(s.records(), fixture_store().records());

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert!(PoiStore::load(&empty).unwrap().is_empty());

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "id,lat,lon,type,name,size_kb\na,1,2,r,n,\nb,1,2,r,n,\nc,1,x,r,n,\n").unwrap();
    match PoiStore::load(&bad) {
        Err(LbsError::Parse { line, message }) => {
            assert_eq!(line, 4);
            assert!(!message.is_empty());
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(PoiStore::load(&dir.path().join("missing.csv")), Err(LbsError::Io(_))));
}

#[test]
fn radius_below_nearest_poi_is_empty() {
    let s = fixture_store();
    let x = s.projection().to_plane(X_LAT, X_LON);
    let hits = s.nearby_search(x, 10.0, None);
    let nearest = hits[0].0;
    assert!(nearest > 0.0);
    assert!(s.nearby_search(x, nearest * 0.99, None).is_empty());
    assert_eq!(s.nearby_search(x, nearest, None).len(), 1);
}

/// A Poisson field of 137 POIs per km² has on average 137·π·0.3² ≈ 38.7
/// POIs within 300 m of a point.
#[test]
fn poisson_field_count_matches_density() {
    let projection = LocalProjection::new(48.85, 2.35);
    let density = 137.0;
    let (half, radius) = (1.0, 0.3);
    let fields = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(137);
    let n_dist = Poisson::new(density * 4.0 * half * half).unwrap();
    let mut total = 0usize;
    for f in 0..fields {
        let n = n_dist.sample(&mut rng) as usize;
        let records = (0..n)
            .map(|i| {
                let p = Location::new(rng.random_range(-half..half), rng.random_range(-half..half));
                let (lat, lon) = projection.to_latlon(p);
                PoiRecord {
                    id: format!("{f}-{i}"),
                    lat,
                    lon,
                    type_tag: "restaurant".into(),
                    name: String::new(),
                    size_kb: None,
                }
            })
            .collect();
        let store = PoiStore::with_projection(records, projection);
        total += store.nearby_search(Location::new(0.0, 0.0), radius, Some("restaurant")).len();
    }
    let mean = total as f64 / fields as f64;
    let expected = density * std::f64::consts::PI * radius * radius;
    let sigma = (expected / fields as f64).sqrt();
    assert!((expected - 38.7).abs() < 0.05);
    assert!((mean - expected).abs() <= 3.0 * sigma, "mean {mean}, expected {expected}");
}

#[test]
fn huge_epsilon_keeps_exactly_the_plain_search() {
    let s = fixture_store();
    let proj = s.projection();
    let x = proj.to_plane(X_LAT, X_LON);
    let plain: Vec<String> = s
        .nearby_search(x, 0.3, Some("restaurant"))
        .iter()
        .map(|h| h.1.id.clone())
        .collect();
    let proxy = Proxy::with_area(Arc::new(s), proj, 40.0).unwrap();
    let mut q = running_example();
    q.privacy = PrivacySpec::Epsilon { epsilon: 1e9 };
    let mut rng = RngStream::new(3);
    for _ in 0..20 {
        let r = proxy.query(&q, &mut rng).unwrap();
        assert!(geoind_core::geometry::euclid(x, r.reported_location) < 0.002);
        assert!(r.aoi_covered);
        assert_eq!(ids(&r.pois), plain);
    }
    assert!(plain.len() >= 4);
}

/// Over 10⁵ runs of the running example the area of interest is covered
/// at least 95% of the time, and when it is not, whatever is returned
/// still lies inside the area of interest.
#[test]
fn running_example_meets_its_accuracy_contract() {
    let s = fixture_store();
    let proj = s.projection();
    let x = proj.to_plane(X_LAT, X_LON);
    let plain: Vec<String> = s
        .nearby_search(x, 0.3, Some("restaurant"))
        .iter()
        .map(|h| h.1.id.clone())
        .collect();
    let proxy = Proxy::with_area(Arc::new(s), proj, 40.0).unwrap();
    let q = running_example();
    let rad_r = proxy.retrieval_radius(&q).unwrap();
    assert!((rad_r - 0.984).abs() < 5e-4, "{rad_r}");

    let n = 100_000;
    let mut rng = RngStream::new(2013);
    let mut covered = 0usize;
    let mut partial = 0usize;
    for _ in 0..n {
        let r = proxy.query(&q, &mut rng).unwrap();
        assert_eq!(r.rad_r_km, rad_r);
        assert!(r.pois.iter().all(|h| h.distance_km <= 0.3));
        let got = ids(&r.pois);
        if r.aoi_covered {
            covered += 1;
            assert_eq!(got, plain);
        } else {
            partial += 1;
            assert!(got.iter().all(|id| plain.contains(id)));
        }
    }
    let f = covered as f64 / n as f64;
    let sigma = (0.95 * 0.05 / n as f64).sqrt();
    assert!(f >= 0.95 - 3.0 * sigma, "coverage {f}");
    assert!(partial > 0);
    assert_eq!(proxy.budget().queries, n as u64);
}

struct CapturingTransport {
    body: String,
    urls: Mutex<Vec<String>>,
}

impl Transport for CapturingTransport {
    fn get(&self, url: &str) -> geoind_lbs::Result<String> {
        self.urls.lock().unwrap().push(url.to_string());
        Ok(self.body.clone())
    }
}

#[test]
fn only_the_reported_point_and_retrieval_radius_leave_the_proxy() {
    let transport = Arc::new(CapturingTransport {
        body: std::fs::read_to_string(fixture("nearbysearch_restaurant.json")).unwrap(),
        urls: Mutex::new(Vec::new()),
    });
    let provider = HttpProvider::new(HttpProviderConfig::new("KEY"), transport.clone());
    let proj = LocalProjection::new(X_LAT, X_LON);
    let proxy = Proxy::with_area(Arc::new(provider), proj, 40.0).unwrap();
    let q = running_example();
    let rad_r_m = (proxy.retrieval_radius(&q).unwrap() * 1000.0).ceil() as u64;
    let mut reported = Vec::new();
    for seed in 0..20 {
        let r = proxy.query(&q, &mut RngStream::new(seed)).unwrap();
        reported.push(format!("location={},{}", (r.reported_lat * 1e6).round() / 1e6, (r.reported_lon * 1e6).round() / 1e6));
    }
    let urls = transport.urls.lock().unwrap().clone();
    assert_eq!(urls.len(), 20);
    for (url, z) in urls.iter().zip(&reported) {
        assert!(url.contains(z.as_str()), "{url} lacks {z}");
        assert!(url.contains(&format!("&radius={rad_r_m}&")));
        assert!(!url.contains(&X_LAT.to_string()) && !url.contains(&X_LON.to_string()), "{url}");
        assert!(!url.contains("radius=300&"));
    }
}

#[test]
fn replayed_response_is_filtered_like_a_store_response() {
    let body = std::fs::read_to_string(fixture("nearbysearch_restaurant.json")).unwrap();
    let provider = HttpProvider::new(HttpProviderConfig::new("KEY"), ReplayTransport::always(body));
    let req = ProviderRequest::new(X_LAT, X_LON, 0.3, "restaurant");
    let got = provider.nearby(&req).unwrap();
    let names: Vec<&str> = got.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["Les Deux Magots", "Cafe de Flore", "Brasserie Lipp"]);
    assert!(got.iter().all(|r| r.size_kb.unwrap() > 0.1 && r.size_kb.unwrap() < 1.0));
}

#[test]
fn unreachable_provider_fails_the_whole_query() {
    let provider = HttpProvider::new(HttpProviderConfig::new("KEY"), ReplayTransport::new());
    let proxy = Proxy::with_area(Arc::new(provider), LocalProjection::new(X_LAT, X_LON), 40.0).unwrap();
    let r = proxy.query(&running_example(), &mut RngStream::new(1));
    assert!(matches!(r, Err(LbsError::Transport { .. })));
}
