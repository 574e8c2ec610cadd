//! Planar locations, metrics, grids and admissible regions.
//!
//! Everything is computed on the plane, in kilometres. [`LocalProjection`]
//! maps latitude/longitude to that plane for city-scale use.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index slack when converting region bounds to lattice indices.
const INDEX_SLACK: f64 = 1e-9;

/// A point on the plane, coordinates in km.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Location { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Offset by a polar displacement.
    pub fn offset_polar(&self, r: f64, theta: f64) -> Location {
        Location::new(self.x + r * theta.cos(), self.y + r * theta.sin())
    }
}

/// Euclidean distance.
pub fn euclid(a: Location, b: Location) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// An ordered, non-empty tuple of locations (e.g. the points of a trace).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Location>", into = "Vec<Location>")]
pub struct LocationTuple(Vec<Location>);

impl LocationTuple {
    pub fn new(points: Vec<Location>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("location tuple", "needs at least one point"));
        }
        Ok(LocationTuple(points))
    }

    pub fn points(&self) -> &[Location] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Arithmetic mean of the points. It is 1-sensitive from d∞ to d:
    /// moving every point by at most t moves the centroid by at most t.
    pub fn centroid(&self) -> Location {
        let n = self.0.len() as f64;
        let (sx, sy) = self
            .0
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Location::new(sx / n, sy / n)
    }
}

impl TryFrom<Vec<Location>> for LocationTuple {
    type Error = Error;
    fn try_from(v: Vec<Location>) -> Result<Self> {
        LocationTuple::new(v)
    }
}

impl From<LocationTuple> for Vec<Location> {
    fn from(t: LocationTuple) -> Self {
        t.0
    }
}

/// `d∞(x, x′) = max_i d(x_i, x′_i)`.
pub fn dist_inf(a: &LocationTuple, b: &LocationTuple) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| euclid(*p, *q))
        .fold(0.0, f64::max))
}

/// Rectangular lattice `origin + (i·u, j·v)`.
///
/// `u` is the step along x and `v` the step along y, with `u ≤ v`; only the
/// smaller unit enters the discretization bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u: f64,
    pub v: f64,
    pub origin: Location,
}

impl GridSpec {
    pub fn new(u: f64, v: f64, origin: Location) -> Result<Self> {
        if !(u > 0.0 && u.is_finite() && v.is_finite() && u <= v) {
            return Err(Error::invalid("grid", format!("need 0 < u <= v, got u={u}, v={v}")));
        }
        Ok(GridSpec { u, v, origin })
    }

    /// Square lattice with step `unit` anchored at the origin.
    pub fn square(unit: f64) -> Result<Self> {
        GridSpec::new(unit, unit, Location::default())
    }

    pub fn point(&self, i: i64, j: i64) -> Location {
        Location::new(
            self.origin.x + i as f64 * self.u,
            self.origin.y + j as f64 * self.v,
        )
    }

    /// Nearest lattice index along one axis; ties go to the smaller index.
    fn nearest_index(coord: f64, origin: f64, step: f64) -> i64 {
        let t = (coord - origin) / step;
        let k = t.floor();
        if t - k > 0.5 {
            k as i64 + 1
        } else {
            k as i64
        }
    }

    pub fn nearest_indices(&self, p: Location) -> (i64, i64) {
        (
            Self::nearest_index(p.x, self.origin.x, self.u),
            Self::nearest_index(p.y, self.origin.y, self.v),
        )
    }

    /// Smallest and largest lattice index inside `[lo, hi]` along x.
    fn x_index_range(&self, lo: f64, hi: f64) -> Option<(i64, i64)> {
        index_range(lo, hi, self.origin.x, self.u)
    }

    fn y_index_range(&self, lo: f64, hi: f64) -> Option<(i64, i64)> {
        index_range(lo, hi, self.origin.y, self.v)
    }
}

fn index_range(lo: f64, hi: f64, origin: f64, step: f64) -> Option<(i64, i64)> {
    let a = ((lo - origin) / step - INDEX_SLACK).ceil() as i64;
    let b = ((hi - origin) / step + INDEX_SLACK).floor() as i64;
    (a <= b).then_some((a, b))
}

/// Closest lattice point to `p`. The lattice is a product of two 1-D
/// lattices, so each axis is rounded independently; ties resolve toward the
/// smaller x, then the smaller y.
pub fn snap_to_grid(p: Location, g: &GridSpec) -> Location {
    let (i, j) = g.nearest_indices(p);
    g.point(i, j)
}

/// The fixed set of locations a mechanism may report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum AdmissibleRegion {
    Rect {
        min: Location,
        max: Location,
    },
    Disc {
        center: Location,
        radius: f64,
    },
}

impl AdmissibleRegion {
    pub fn rect(min: Location, max: Location) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min.x <= max.x && min.y <= max.y) {
            return Err(Error::invalid("region", "rectangle needs finite min <= max"));
        }
        Ok(AdmissibleRegion::Rect { min, max })
    }

    pub fn disc(center: Location, radius: f64) -> Result<Self> {
        if !(center.is_finite() && radius.is_finite() && radius >= 0.0) {
            return Err(Error::invalid("region", "disc needs finite center and radius >= 0"));
        }
        Ok(AdmissibleRegion::Disc { center, radius })
    }

    /// Square `[0, side]²`.
    pub fn square(side: f64) -> Result<Self> {
        Self::rect(Location::new(0.0, 0.0), Location::new(side, side))
    }

    /// Maximum distance between two points of the region.
    pub fn diameter(&self) -> f64 {
        match *self {
            AdmissibleRegion::Rect { min, max } => euclid(min, max),
            AdmissibleRegion::Disc { radius, .. } => 2.0 * radius,
        }
    }

    pub fn contains(&self, p: Location) -> bool {
        const TOL: f64 = 1e-12;
        match *self {
            AdmissibleRegion::Rect { min, max } => {
                p.x >= min.x - TOL && p.x <= max.x + TOL && p.y >= min.y - TOL && p.y <= max.y + TOL
            }
            AdmissibleRegion::Disc { center, radius } => euclid(p, center) <= radius + TOL,
        }
    }

    /// Whether `A ∩ G` is non-empty, without enumerating it.
    pub fn has_grid_point(&self, g: &GridSpec) -> bool {
        match *self {
            AdmissibleRegion::Rect { min, max } => {
                g.x_index_range(min.x, max.x).is_some() && g.y_index_range(min.y, max.y).is_some()
            }
            AdmissibleRegion::Disc { center, radius } => {
                if euclid(snap_to_grid(center, g), center) <= radius {
                    return true;
                }
                g.x_index_range(center.x - radius, center.x + radius)
                    .is_some_and(|(i0, i1)| (i0..=i1).any(|i| disc_column(center, radius, g, i).is_some()))
            }
        }
    }

    /// All points of `A ∩ G`, in increasing (x, y) order.
    pub fn grid_points(&self, g: &GridSpec) -> Vec<Location> {
        let mut out = Vec::new();
        match *self {
            AdmissibleRegion::Rect { min, max } => {
                if let (Some((i0, i1)), Some((j0, j1))) =
                    (g.x_index_range(min.x, max.x), g.y_index_range(min.y, max.y))
                {
                    for i in i0..=i1 {
                        for j in j0..=j1 {
                            out.push(g.point(i, j));
                        }
                    }
                }
            }
            AdmissibleRegion::Disc { center, radius } => {
                if let Some((i0, i1)) = g.x_index_range(center.x - radius, center.x + radius) {
                    for i in i0..=i1 {
                        if let Some((j0, j1)) = disc_column(center, radius, g, i) {
                            for j in j0..=j1 {
                                out.push(g.point(i, j));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Range of y-indices of column `i` that fall inside the disc.
fn disc_column(center: Location, radius: f64, g: &GridSpec, i: i64) -> Option<(i64, i64)> {
    let x = g.point(i, 0).x;
    let dx = x - center.x;
    let h2 = radius * radius - dx * dx;
    if h2 < -INDEX_SLACK * radius.max(1.0) {
        return None;
    }
    let h = h2.max(0.0).sqrt();
    g.y_index_range(center.y - h, center.y + h)
}

/// Strict lexicographic-with-distance ordering used to break ties.
fn better(cand: (f64, Location), best: Option<(f64, Location)>) -> bool {
    match best {
        None => true,
        Some((bd, bp)) => {
            cand.0 < bd || (cand.0 == bd && (cand.1.x, cand.1.y) < (bp.x, bp.y))
        }
    }
}

/// Closest point of `A ∩ G` to `p`, with the same tie rule as
/// [`snap_to_grid`].
pub fn snap_to_region(p: Location, a: &AdmissibleRegion, g: &GridSpec) -> Result<Location> {
    match *a {
        AdmissibleRegion::Rect { min, max } => {
            let (i0, i1) = g.x_index_range(min.x, max.x).ok_or(Error::EmptyRegion)?;
            let (j0, j1) = g.y_index_range(min.y, max.y).ok_or(Error::EmptyRegion)?;
            let (i, j) = g.nearest_indices(p);
            Ok(g.point(i.clamp(i0, i1), j.clamp(j0, j1)))
        }
        AdmissibleRegion::Disc { center, radius } => {
            let direct = snap_to_grid(p, g);
            if euclid(direct, center) <= radius {
                return Ok(direct);
            }
            snap_to_disc(p, center, radius, g)
        }
    }
}

fn snap_to_disc(p: Location, center: Location, radius: f64, g: &GridSpec) -> Result<Location> {
    let (i0, i1) = g
        .x_index_range(center.x - radius, center.x + radius)
        .ok_or(Error::EmptyRegion)?;
    let start = GridSpec::nearest_index(p.x, g.origin.x, g.u).clamp(i0, i1);
    let mut best: Option<(f64, Location)> = None;

    // Walk columns outward from the one nearest p; stop once a column's
    // horizontal gap alone exceeds the best distance found.
    let consider = |i: i64, best: &mut Option<(f64, Location)>| -> bool {
        let x = g.point(i, 0).x;
        if let Some((bd, _)) = *best {
            if (x - p.x).abs() > bd {
                return false;
            }
        }
        if let Some((j0, j1)) = disc_column(center, radius, g, i) {
            let j = GridSpec::nearest_index(p.y, g.origin.y, g.v).clamp(j0, j1);
            let q = g.point(i, j);
            let cand = (euclid(p, q), q);
            if better(cand, *best) {
                *best = Some(cand);
            }
        }
        true
    };

    let mut left = start;
    let mut right = start + 1;
    let (mut go_left, mut go_right) = (true, true);
    while go_left || go_right {
        if go_left {
            if left < i0 {
                go_left = false;
            } else {
                go_left = consider(left, &mut best);
                left -= 1;
            }
        }
        if go_right {
            if right > i1 {
                go_right = false;
            } else {
                go_right = consider(right, &mut best);
                right += 1;
            }
        }
    }
    best.map(|(_, q)| q).ok_or(Error::EmptyRegion)
}

/// Mean Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Local equirectangular projection about a reference point; adequate at
/// city scale, where the plane approximates the Earth surface well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProjection {
    pub ref_lat: f64,
    pub ref_lon: f64,
}

impl LocalProjection {
    pub fn new(ref_lat: f64, ref_lon: f64) -> Self {
        LocalProjection { ref_lat, ref_lon }
    }

    pub fn to_plane(&self, lat: f64, lon: f64) -> Location {
        let k = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
        Location::new(
            (lon - self.ref_lon) * k * self.ref_lat.to_radians().cos(),
            (lat - self.ref_lat) * k,
        )
    }

    /// Inverse of [`to_plane`](Self::to_plane); returns `(lat, lon)`.
    pub fn to_latlon(&self, p: Location) -> (f64, f64) {
        let k = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
        (
            self.ref_lat + p.y / k,
            self.ref_lon + p.x / (k * self.ref_lat.to_radians().cos()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Location, b: Location) -> bool {
        euclid(a, b) < 1e-12
    }

    #[test]
    fn euclid_examples() {
        let o = Location::new(0.0, 0.0);
        assert_eq!(euclid(o, o), 0.0);
        assert_eq!(euclid(o, Location::new(3.0, 4.0)), 5.0);
        assert!((euclid(Location::new(0.1, 0.1), Location::new(0.4, 0.5)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dist_inf_examples() {
        let t = |v: &[(f64, f64)]| {
            LocationTuple::new(v.iter().map(|&(x, y)| Location::new(x, y)).collect()).unwrap()
        };
        let a = t(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(dist_inf(&a, &a).unwrap(), 0.0);
        assert_eq!(dist_inf(&a, &t(&[(0.0, 1.0), (1.0, 0.0)])).unwrap(), 1.0);
        let b = t(&[(0.0, 0.0), (2.0, 0.0)]);
        let c = t(&[(0.3, 0.4), (2.0, 1.2)]);
        assert!((dist_inf(&b, &c).unwrap() - 1.2).abs() < 1e-12);
        assert!(matches!(
            dist_inf(&a, &t(&[(0.0, 0.0)])),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
        assert!(LocationTuple::new(vec![]).is_err());
    }

    #[test]
    fn snap_to_grid_examples() {
        let g = GridSpec::square(0.1).unwrap();
        assert!(close(snap_to_grid(Location::new(0.14, 0.26), &g), Location::new(0.1, 0.3)));
        let on = g.point(3, 7);
        assert_eq!(snap_to_grid(on, &g), on);
        assert_eq!(snap_to_grid(Location::new(0.05, 0.05), &g), Location::new(0.0, 0.0));
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.2, 0.1, Location::default()).is_err());
        assert!(GridSpec::new(0.0, 0.1, Location::default()).is_err());
        assert!(GridSpec::new(0.1, 0.2, Location::default()).is_ok());
    }

    #[test]
    fn snap_to_region_examples() {
        let g = GridSpec::square(0.1).unwrap();
        let sq = AdmissibleRegion::square(1.0).unwrap();
        let inside = g.point(4, 6);
        assert_eq!(snap_to_region(inside, &sq, &g).unwrap(), inside);
        assert!(close(
            snap_to_region(Location::new(1.7, 0.52), &sq, &g).unwrap(),
            Location::new(1.0, 0.5)
        ));
        let disc = AdmissibleRegion::disc(Location::default(), 0.5).unwrap();
        assert!(close(
            snap_to_region(Location::new(0.9, 0.0), &disc, &g).unwrap(),
            Location::new(0.5, 0.0)
        ));
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let g = GridSpec::square(1.0).unwrap();
        let tiny = AdmissibleRegion::rect(Location::new(0.2, 0.2), Location::new(0.3, 0.3)).unwrap();
        assert_eq!(snap_to_region(Location::default(), &tiny, &g), Err(Error::EmptyRegion));
        let disc = AdmissibleRegion::disc(Location::new(0.5, 0.5), 0.1).unwrap();
        assert_eq!(snap_to_region(Location::default(), &disc, &g), Err(Error::EmptyRegion));
        assert!(!tiny.has_grid_point(&g) && !disc.has_grid_point(&g));
    }

    #[test]
    fn diameters() {
        let r = AdmissibleRegion::rect(Location::new(0.0, 0.0), Location::new(3.0, 4.0)).unwrap();
        assert_eq!(r.diameter(), 5.0);
        let d = AdmissibleRegion::disc(Location::new(1.0, 1.0), 2.5).unwrap();
        assert_eq!(d.diameter(), 5.0);
    }

    #[test]
    fn projection_round_trip() {
        let proj = LocalProjection::new(48.85412, 2.33316);
        let p = proj.to_plane(48.86, 2.34);
        let (lat, lon) = proj.to_latlon(p);
        assert!((lat - 48.86).abs() < 1e-12 && (lon - 2.34).abs() < 1e-12);
        // 0.01° of latitude is ~1.11 km
        assert!((proj.to_plane(48.86412, 2.33316).y - 1.1119).abs() < 1e-3);
    }

    fn brute_force_nearest(p: Location, members: &[Location]) -> Location {
        let mut best: Option<(f64, Location)> = None;
        for &q in members {
            let cand = (euclid(p, q), q);
            if better(cand, best) {
                best = Some(cand);
            }
        }
        best.unwrap().1
    }

    fn arb_loc() -> impl Strategy<Value = Location> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y)| Location::new(x, y))
    }

    proptest! {
        #[test]
        fn snap_to_grid_idempotent_and_bounded(p in arb_loc(), u in 0.01f64..0.5, k in 1.0f64..3.0) {
            let g = GridSpec::new(u, u * k, Location::new(0.013, -0.007)).unwrap();
            let s = snap_to_grid(p, &g);
            prop_assert_eq!(snap_to_grid(s, &g), s);
            let bound = 0.5 * (g.u * g.u + g.v * g.v).sqrt();
            prop_assert!(euclid(p, s) <= bound + 1e-12);
        }

        #[test]
        fn snap_to_region_matches_brute_force(
            p in arb_loc(),
            cx in -0.5f64..0.5, cy in -0.5f64..0.5, r in 0.15f64..1.0,
            u in 0.05f64..0.2,
        ) {
            let g = GridSpec::new(u, u * 1.3, Location::default()).unwrap();
            for a in [
                AdmissibleRegion::disc(Location::new(cx, cy), r).unwrap(),
                AdmissibleRegion::rect(Location::new(cx - r, cy - 0.5 * r), Location::new(cx + r, cy + r)).unwrap(),
            ] {
                let members = a.grid_points(&g);
                prop_assert_eq!(a.has_grid_point(&g), !members.is_empty());
                prop_assume!(!members.is_empty());
                let s = snap_to_region(p, &a, &g).unwrap();
                prop_assert!(a.contains(s));
                let oracle = brute_force_nearest(p, &members);
                prop_assert!((euclid(p, s) - euclid(p, oracle)).abs() < 1e-12);
            }
        }

        #[test]
        fn dist_inf_is_a_metric(
            a in proptest::collection::vec(arb_loc(), 3),
            b in proptest::collection::vec(arb_loc(), 3),
            c in proptest::collection::vec(arb_loc(), 3),
        ) {
            let (a, b, c) = (
                LocationTuple::new(a).unwrap(),
                LocationTuple::new(b).unwrap(),
                LocationTuple::new(c).unwrap(),
            );
            prop_assert_eq!(dist_inf(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(dist_inf(&a, &b).unwrap(), dist_inf(&b, &a).unwrap());
            prop_assert!(dist_inf(&a, &c).unwrap() <= dist_inf(&a, &b).unwrap() + dist_inf(&b, &c).unwrap() + 1e-12);
        }
    }
}
