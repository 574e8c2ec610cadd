//! In-memory POI store with a uniform-cell spatial index.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use geoind_core::accuracy::DEFAULT_POI_SIZE_KB;
use geoind_core::geometry::euclid;
use geoind_core::{LocalProjection, Location};
use serde::{Deserialize, Serialize};

use crate::error::{LbsError, Result};

/// A point of interest as stored on disk and returned to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiRecord {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(rename = "type")]
    pub type_tag: String,
    #[serde(default)]
    pub name: String,
    /// Size of the record's payload; falls back to the city-wide average.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_kb: Option<f64>,
}

impl PoiRecord {
    pub fn payload_size_kb(&self) -> f64 {
        self.size_kb.unwrap_or(DEFAULT_POI_SIZE_KB)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat)) {
            return Err(format!("latitude {} out of range", self.lat));
        }
        if !(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon)) {
            return Err(format!("longitude {} out of range", self.lon));
        }
        if let Some(s) = self.size_kb {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(format!("size_kb must be >= 0, got {s}"));
            }
        }
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        Ok(())
    }
}

/// POIs projected onto a local plane, bucketed into square cells.
#[derive(Debug, Clone)]
pub struct PoiStore {
    projection: LocalProjection,
    records: Vec<PoiRecord>,
    points: Vec<Location>,
    cell_km: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

const DEFAULT_CELL_KM: f64 = 0.25;

impl PoiStore {
    /// Build a store projected about the mean position of `records`.
    pub fn new(records: Vec<PoiRecord>) -> Self {
        let projection = if records.is_empty() {
            LocalProjection::new(0.0, 0.0)
        } else {
            let n = records.len() as f64;
            LocalProjection::new(
                records.iter().map(|r| r.lat).sum::<f64>() / n,
                records.iter().map(|r| r.lon).sum::<f64>() / n,
            )
        };
        Self::with_projection(records, projection)
    }

    pub fn with_projection(records: Vec<PoiRecord>, projection: LocalProjection) -> Self {
        let points: Vec<Location> = records
            .iter()
            .map(|r| projection.to_plane(r.lat, r.lon))
            .collect();
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(cell_of(*p, DEFAULT_CELL_KM)).or_default().push(i);
        }
        PoiStore {
            projection,
            records,
            points,
            cell_km: DEFAULT_CELL_KM,
            cells,
        }
    }

    /// Load a CSV file (header `id,lat,lon,type,name,size_kb`) or, for
    /// `.jsonl`/`.json` files, one JSON object per line.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => Self::from_json_lines(file),
            _ => Self::from_csv(file),
        }
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut records = Vec::new();
        for row in rdr.deserialize::<PoiRecord>() {
            let rec = row.map_err(|e| LbsError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            // header is line 1, so the n-th record sits on line n + 1
            let line = records.len() as u64 + 2;
            rec.validate().map_err(|message| LbsError::Parse { line, message })?;
            records.push(rec);
        }
        Ok(Self::new(records))
    }

    pub fn from_json_lines<R: Read>(reader: R) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PoiRecord = serde_json::from_str(&line).map_err(|e| LbsError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            rec.validate().map_err(|message| LbsError::Parse {
                line: line_no,
                message,
            })?;
            records.push(rec);
        }
        Ok(Self::new(records))
    }

    pub fn projection(&self) -> LocalProjection {
        self.projection
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PoiRecord] {
        &self.records
    }

    /// All POIs within the closed ball of `radius` km around `center`
    /// (plane coordinates), optionally filtered by type, nearest first.
    pub fn nearby_search(&self, center: Location, radius: f64, type_tag: Option<&str>) -> Vec<(f64, &PoiRecord)> {
        if !(radius >= 0.0) {
            return Vec::new();
        }
        let (c0x, c0y) = cell_of(Location::new(center.x - radius, center.y - radius), self.cell_km);
        let (c1x, c1y) = cell_of(Location::new(center.x + radius, center.y + radius), self.cell_km);
        let mut candidates: Vec<usize> = Vec::new();
        let span = (c1x - c0x + 1).saturating_mul(c1y - c0y + 1);
        if span as usize > self.cells.len() {
            candidates.extend(self.cells.values().flatten());
        } else {
            for cx in c0x..=c1x {
                for cy in c0y..=c1y {
                    if let Some(idx) = self.cells.get(&(cx, cy)) {
                        candidates.extend(idx);
                    }
                }
            }
        }
        let mut out: Vec<(f64, &PoiRecord)> = candidates
            .into_iter()
            .filter(|&i| type_tag.is_none_or(|t| t == self.records[i].type_tag))
            .map(|i| (euclid(center, self.points[i]), &self.records[i]))
            .filter(|&(d, _)| d <= radius)
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
        out
    }

    /// Same as [`nearby_search`](Self::nearby_search) with the centre given
    /// in degrees.
    pub fn nearby_search_latlon(&self, lat: f64, lon: f64, radius: f64, type_tag: Option<&str>) -> Vec<(f64, &PoiRecord)> {
        self.nearby_search(self.projection.to_plane(lat, lon), radius, type_tag)
    }
}

fn cell_of(p: Location, cell_km: f64) -> (i64, i64) {
    ((p.x / cell_km).floor() as i64, (p.y / cell_km).floor() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "id,lat,lon,type,name,size_kb
a,48.85412,2.33316,restaurant,Les Deux Magots,1.2
b,48.85500,2.33316,restaurant,North,
c,48.85412,2.33500,cafe,East,0.5
";

    #[test]
    fn empty_file_gives_empty_store() {
        let s = PoiStore::from_csv("id,lat,lon,type,name,size_kb\n".as_bytes()).unwrap();
        assert!(s.is_empty());
        assert!(PoiStore::from_json_lines("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn csv_rows_load_with_default_sizes() {
        let s = PoiStore::from_csv(CSV.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.records()[0].payload_size_kb(), 1.2);
        assert_eq!(s.records()[1].payload_size_kb(), DEFAULT_POI_SIZE_KB);
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let bad = "id,lat,lon,type,name,size_kb\na,48.8,2.3,r,x,\nb,north,2.3,r,y,\n";
        match PoiStore::from_csv(bad.as_bytes()) {
            Err(LbsError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let neg = "id,lat,lon,type,name,size_kb\na,48.8,2.3,r,x,-1\n";
        assert!(matches!(PoiStore::from_csv(neg.as_bytes()), Err(LbsError::Parse { line: 2, .. })));
        let jl = "{\"id\":\"a\",\"lat\":1,\"lon\":2,\"type\":\"r\"}\n{oops}\n";
        assert!(matches!(PoiStore::from_json_lines(jl.as_bytes()), Err(LbsError::Parse { line: 2, .. })));
    }

    #[test]
    fn search_is_a_closed_ball_sorted_by_distance() {
        let s = PoiStore::from_csv(CSV.as_bytes()).unwrap();
        let a = s.projection().to_plane(48.85412, 2.33316);
        let hits = s.nearby_search(a, 1.0, None);
        let ids: Vec<&str> = hits.iter().map(|h| h.1.id.as_str()).collect();
        assert_eq!(ids[0], "a");
        assert!(hits.windows(2).all(|w| w[0].0 <= w[1].0));
        assert_eq!(s.nearby_search(a, 1.0, Some("cafe")).len(), 1);
        let d_b = hits.iter().find(|h| h.1.id == "b").unwrap().0;
        assert!(s.nearby_search(a, d_b, Some("restaurant")).iter().any(|h| h.1.id == "b"));
        assert_eq!(s.nearby_search(a, d_b * 0.999, Some("restaurant")).len(), 1);
        let far = Location::new(a.x + 50.0, a.y);
        assert!(s.nearby_search(far, 1.0, None).is_empty());
    }
}
