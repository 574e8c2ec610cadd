//! The discrete grid world: square regions, optional zones, priors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclid, AdmissibleRegion, Location};

/// Zones are `block_rows × block_cols` blocks of regions, each represented
/// by its central region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZonePartition {
    pub block_rows: usize,
    pub block_cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct WorldFile {
    rows: usize,
    cols: usize,
    side_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zones: Option<ZonePartition>,
}

/// `rows × cols` square regions of side `side_km`, numbered row-major from
/// zero starting at the top-left region (row 0). Region `(row, col)` has
/// its centroid at `((col + ½)·side, (row + ½)·side)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorldFile", into = "WorldFile")]
pub struct RegionWorld {
    rows: usize,
    cols: usize,
    side_km: f64,
    zones: Option<ZonePartition>,
    centroids: Vec<Location>,
    dist: Vec<f64>,
}

impl TryFrom<WorldFile> for RegionWorld {
    type Error = Error;
    fn try_from(f: WorldFile) -> Result<Self> {
        RegionWorld::new(f.rows, f.cols, f.side_km, f.zones)
    }
}

impl From<RegionWorld> for WorldFile {
    fn from(w: RegionWorld) -> Self {
        WorldFile {
            rows: w.rows,
            cols: w.cols,
            side_km: w.side_km,
            zones: w.zones,
        }
    }
}

impl RegionWorld {
    pub fn new(rows: usize, cols: usize, side_km: f64, zones: Option<ZonePartition>) -> Result<Self> {
        if rows == 0 || cols == 0 || !(side_km > 0.0 && side_km.is_finite()) {
            return Err(Error::invalid("world", "need rows, cols >= 1 and side > 0"));
        }
        if let Some(z) = zones {
            if z.block_rows == 0
                || z.block_cols == 0
                || !rows.is_multiple_of(z.block_rows)
                || !cols.is_multiple_of(z.block_cols)
                || z.block_rows % 2 == 0
                || z.block_cols % 2 == 0
            {
                return Err(Error::invalid(
                    "world",
                    "zone blocks must be odd-sized and tile the grid exactly",
                ));
            }
        }
        let centroids: Vec<Location> = (0..rows * cols)
            .map(|i| {
                let (r, c) = (i / cols, i % cols);
                Location::new((c as f64 + 0.5) * side_km, (r as f64 + 0.5) * side_km)
            })
            .collect();
        let n = centroids.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = euclid(centroids[i], centroids[j]);
            }
        }
        Ok(RegionWorld {
            rows,
            cols,
            side_km,
            zones,
            centroids,
            dist,
        })
    }

    /// 9×9 regions of 100 m with 3×3 zones.
    pub fn default_world() -> Self {
        RegionWorld::new(
            9,
            9,
            0.1,
            Some(ZonePartition {
                block_rows: 3,
                block_cols: 3,
            }),
        )
        .expect("default world is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn side_km(&self) -> f64 {
        self.side_km
    }

    pub fn zones(&self) -> Option<ZonePartition> {
        self.zones
    }

    pub fn n_regions(&self) -> usize {
        self.centroids.len()
    }

    pub fn centroids(&self) -> &[Location] {
        &self.centroids
    }

    pub fn centroid(&self, i: usize) -> Location {
        self.centroids[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n_regions() + j]
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// One-based label, as regions are usually numbered on a map.
    pub fn label(&self, i: usize) -> usize {
        i + 1
    }

    /// Bounding square of the world.
    pub fn bounds(&self) -> AdmissibleRegion {
        AdmissibleRegion::rect(
            Location::new(0.0, 0.0),
            Location::new(self.cols as f64 * self.side_km, self.rows as f64 * self.side_km),
        )
        .expect("world bounds are finite")
    }

    pub fn diameter(&self) -> f64 {
        self.bounds().diameter()
    }

    /// Region containing `p`; points outside map to the nearest border region.
    pub fn region_of(&self, p: Location) -> usize {
        let clamp = |v: f64, n: usize| -> usize {
            let k = (v / self.side_km).floor();
            if k < 0.0 {
                0
            } else {
                (k as usize).min(n - 1)
            }
        };
        self.index(clamp(p.y, self.rows), clamp(p.x, self.cols))
    }

    /// Central region of the zone that contains region `i`.
    pub fn zone_center(&self, i: usize) -> Result<usize> {
        let z = self
            .zones
            .ok_or_else(|| Error::invalid("world", "no zone partition"))?;
        let (r, c) = (i / self.cols, i % self.cols);
        let zr = r / z.block_rows * z.block_rows + z.block_rows / 2;
        let zc = c / z.block_cols * z.block_cols + z.block_cols / 2;
        Ok(self.index(zr, zc))
    }

    /// Largest pairwise distance within a set of regions.
    pub fn set_diameter(&self, set: &[usize]) -> f64 {
        let mut d: f64 = 0.0;
        for &a in set {
            for &b in set {
                d = d.max(self.distance(a, b));
            }
        }
        d
    }
}

/// A probability distribution over the regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorFile", into = "PriorFile")]
pub struct Prior {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PriorFile {
    weights: Vec<f64>,
}

impl TryFrom<PriorFile> for Prior {
    type Error = Error;
    fn try_from(f: PriorFile) -> Result<Self> {
        Prior::new(f.weights)
    }
}

impl From<Prior> for PriorFile {
    fn from(p: Prior) -> Self {
        PriorFile { weights: p.weights }
    }
}

pub const PRIOR_SUM_TOL: f64 = 1e-12;

impl Prior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("prior", "no weights"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("prior", "weights must be finite and >= 0"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::invalid("prior", format!("weights sum to {s}")));
        }
        Ok(Prior { weights })
    }

    /// Normalize non-negative weights.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0 && s.is_finite()) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("prior", "weights must be >= 0 with a positive sum"));
        }
        Prior::new(weights.into_iter().map(|w| w / s).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Prior::normalized(vec![1.0; n])
    }

    /// Uniform over `support`.
    pub fn uniform_on(n: usize, support: &[usize]) -> Result<Self> {
        let mut w = vec![0.0; n];
        for &i in support {
            if i >= n {
                return Err(Error::invalid("prior", format!("region {i} out of range")));
            }
            w[i] = 1.0;
        }
        Prior::normalized(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.weights[i]).sum()
    }

    /// `π_{|N}`: conditioned on `N`, as a vector over all regions.
    pub fn restrict(&self, set: &[usize]) -> Result<Vec<f64>> {
        restrict(&self.weights, set)
    }
}

pub(crate) fn restrict(weights: &[f64], set: &[usize]) -> Result<Vec<f64>> {
    let m: f64 = set.iter().map(|&i| weights[i]).sum();
    if !(m > 0.0) {
        return Err(Error::ZeroProbabilityObservation);
    }
    let mut out = vec![0.0; weights.len()];
    for &i in set {
        out[i] = weights[i] / m;
    }
    Ok(out)
}

/// Concentrated priors shipped with the harness. The figure priors in the
/// literature are only given pictorially, so these are concrete stand-ins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedPrior {
    Uniform,
    /// Uniform over a top-left block of ⌈4n/9⌉ rows and columns (4×4 on the default world).
    CornerBlock,
    /// Uniform over a central block of ⌈5n/9⌉ rows and columns (5×5 on the default world).
    CenterBlock,
    /// Uniform over regions whose centroid is 2.5–4 sides from the world centre.
    Ring,
}

impl NamedPrior {
    pub const ALL: [NamedPrior; 4] = [
        NamedPrior::Uniform,
        NamedPrior::CornerBlock,
        NamedPrior::CenterBlock,
        NamedPrior::Ring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedPrior::Uniform => "uniform",
            NamedPrior::CornerBlock => "corner-block",
            NamedPrior::CenterBlock => "center-block",
            NamedPrior::Ring => "ring",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn build(self, world: &RegionWorld) -> Result<Prior> {
        let n = world.n_regions();
        let (rows, cols) = (world.rows(), world.cols());
        let support: Vec<usize> = match self {
            NamedPrior::Uniform => (0..n).collect(),
            NamedPrior::CornerBlock => {
                let (br, bc) = ((4 * rows).div_ceil(9), (4 * cols).div_ceil(9));
                (0..n).filter(|&i| i / cols < br && i % cols < bc).collect()
            }
            NamedPrior::CenterBlock => {
                let (br, bc) = ((5 * rows).div_ceil(9), (5 * cols).div_ceil(9));
                let (r0, c0) = ((rows - br) / 2, (cols - bc) / 2);
                (0..n)
                    .filter(|&i| {
                        let (r, c) = (i / cols, i % cols);
                        (r0..r0 + br).contains(&r) && (c0..c0 + bc).contains(&c)
                    })
                    .collect()
            }
            NamedPrior::Ring => {
                let b = world.bounds();
                let center = match b {
                    AdmissibleRegion::Rect { min, max } => {
                        Location::new(0.5 * (min.x + max.x), 0.5 * (min.y + max.y))
                    }
                    AdmissibleRegion::Disc { center, .. } => center,
                };
                let s = world.side_km();
                (0..n)
                    .filter(|&i| {
                        let d = euclid(world.centroid(i), center) / s;
                        (2.5..=4.0).contains(&d)
                    })
                    .collect()
            }
        };
        Prior::uniform_on(n, &support)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_world_layout() {
        let w = RegionWorld::default_world();
        assert_eq!(w.n_regions(), 81);
        assert_eq!(w.centroid(0), Location::new(0.05, 0.05));
        assert!((w.distance(0, 1) - 0.1).abs() < 1e-15);
        assert!((w.diameter() - 0.9 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zone_centers() {
        let w = RegionWorld::default_world();
        // label 1 (top-left corner) is represented by label 11
        assert_eq!(w.label(w.zone_center(0).unwrap()), 11);
        for i in [10, 13, 16, 37, 40, 43, 64, 67, 70] {
            assert_eq!(w.zone_center(i).unwrap(), i);
        }
        for i in [0, 1, 2, 9, 11, 18, 19, 20] {
            assert_eq!(w.zone_center(i).unwrap(), 10);
        }
        let no_zones = RegionWorld::new(3, 3, 0.1, None).unwrap();
        assert!(no_zones.zone_center(0).is_err());
    }

    #[test]
    fn world_validation() {
        assert!(RegionWorld::new(0, 3, 0.1, None).is_err());
        assert!(RegionWorld::new(3, 3, 0.0, None).is_err());
        let z = ZonePartition { block_rows: 2, block_cols: 2 };
        assert!(RegionWorld::new(4, 4, 0.1, Some(z)).is_err());
        let z = ZonePartition { block_rows: 3, block_cols: 3 };
        assert!(RegionWorld::new(8, 9, 0.1, Some(z)).is_err());
    }

    #[test]
    fn world_json_schema() {
        let w = RegionWorld::default_world();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"rows":9,"cols":9,"side_km":0.1,"zones":{"block_rows":3,"block_cols":3}}"#);
        let back: RegionWorld = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn region_lookup() {
        let w = RegionWorld::default_world();
        assert_eq!(w.region_of(Location::new(0.05, 0.05)), 0);
        assert_eq!(w.region_of(Location::new(0.85, 0.05)), 8);
        assert_eq!(w.region_of(Location::new(-3.0, 5.0)), 72);
    }

    #[test]
    fn prior_validation_and_restriction() {
        assert!(Prior::new(vec![0.5, 0.4]).is_err());
        assert!(Prior::new(vec![1.5, -0.5]).is_err());
        let p = Prior::new(vec![0.2, 0.3, 0.5]).unwrap();
        let r = p.restrict(&[0, 2]).unwrap();
        assert!((r[0] - 0.2 / 0.7).abs() < 1e-15 && r[1] == 0.0);
        let q = Prior::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(q.restrict(&[0]), Err(Error::ZeroProbabilityObservation));
    }

    #[test]
    fn named_priors_are_concentrated() {
        let w = RegionWorld::default_world();
        for p in NamedPrior::ALL {
            let prior = p.build(&w).unwrap();
            let support = prior.weights().iter().filter(|&&v| v > 0.0).count();
            match p {
                NamedPrior::Uniform => assert_eq!(support, 81),
                NamedPrior::CornerBlock => assert_eq!(support, 16),
                NamedPrior::CenterBlock => assert_eq!(support, 25),
                NamedPrior::Ring => assert!(support > 8 && support < 81),
            }
            assert_eq!(NamedPrior::parse(p.name()), Some(p));
        }
    }
}
