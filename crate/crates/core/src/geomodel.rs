//! Geometric and domain primitives shared by every stage of the pipeline.
//!
//! Coordinates are WGS84 degrees in GeoJSON axis order (lon, lat). All types
//! validate at construction and are immutable afterwards, so a value that
//! exists is always well formed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for ring closure and boundary contact tests, in degrees.
pub const COORD_EPSILON: f64 = 1e-9;

/// Mean Earth radius used for great-circle distances.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("coordinate out of range: lon={lon}, lat={lat}")]
    InvalidCoordinate { lon: f64, lat: f64 },
    #[error("invalid bbox [{west}, {south}, {east}, {north}]")]
    InvalidBBox {
        west: f64,
        south: f64,
        east: f64,
        north: f64,
    },
    #[error("linestring needs at least 2 points, got {0}")]
    ShortLineString(usize),
    #[error("ring needs at least 4 points, got {0}")]
    ShortRing(usize),
    #[error("ring is not closed")]
    OpenRing,
    #[error("{0} must have at least one member")]
    EmptyCollection(&'static str),
    #[error("expected `west,south,east,north`: {0}")]
    BBoxSyntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lon: f64,
    lat: f64,
}

impl GeoPoint {
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeoError> {
        if !lon.is_finite() || !lat.is_finite() || !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidCoordinate { lon, lat });
        }
        Ok(GeoPoint { lon, lat })
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    fn approx_eq(&self, other: &GeoPoint) -> bool {
        (self.lon - other.lon).abs() <= COORD_EPSILON && (self.lat - other.lat).abs() <= COORD_EPSILON
    }
}

impl Serialize for GeoPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.lon, self.lat].serialize(s)
    }
}

impl<'de> Deserialize<'de> for GeoPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [lon, lat] = <[f64; 2]>::deserialize(d)?;
        GeoPoint::new(lon, lat).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned bounding box. Boxes crossing the antimeridian are not
/// representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    west: f64,
    south: f64,
    east: f64,
    north: f64,
}

impl BBox {
    pub fn new(west: f64, south: f64, east: f64, north: f64) -> Result<Self, GeoError> {
        let err = GeoError::InvalidBBox {
            west,
            south,
            east,
            north,
        };
        if GeoPoint::new(west, south).is_err() || GeoPoint::new(east, north).is_err() {
            return Err(err);
        }
        if west > east || south > north {
            return Err(err);
        }
        Ok(BBox {
            west,
            south,
            east,
            north,
        })
    }

    /// The whole representable world.
    pub fn world() -> Self {
        BBox {
            west: -180.0,
            south: -90.0,
            east: 180.0,
            north: 90.0,
        }
    }

    pub fn of_point(p: GeoPoint) -> Self {
        BBox {
            west: p.lon,
            south: p.lat,
            east: p.lon,
            north: p.lat,
        }
    }

    pub fn west(&self) -> f64 {
        self.west
    }
    pub fn south(&self) -> f64 {
        self.south
    }
    pub fn east(&self) -> f64 {
        self.east
    }
    pub fn north(&self) -> f64 {
        self.north
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.west, self.south, self.east, self.north]
    }

    /// Inclusive test: touching edges or corners count as intersecting.
    pub fn intersects(&self, other: &BBox) -> bool {
        self.west <= other.east && other.west <= self.east && self.south <= other.north && other.south <= self.north
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.west <= other.west && self.south <= other.south && self.east >= other.east && self.north >= other.north
    }

    pub fn contains_point(&self, p: GeoPoint) -> bool {
        self.west <= p.lon && p.lon <= self.east && self.south <= p.lat && p.lat <= self.north
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            west: self.west.min(other.west),
            south: self.south.min(other.south),
            east: self.east.max(other.east),
            north: self.north.max(other.north),
        }
    }

    /// Planar area in square degrees.
    pub fn area(&self) -> f64 {
        (self.east - self.west) * (self.north - self.south)
    }

    fn extend(&mut self, p: GeoPoint) {
        self.west = self.west.min(p.lon);
        self.south = self.south.min(p.lat);
        self.east = self.east.max(p.lon);
        self.north = self.north.max(p.lat);
    }
}

/// `bbox_intersects` as a free function.
pub fn bbox_intersects(a: &BBox, b: &BBox) -> bool {
    a.intersects(b)
}

impl Serialize for BBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [w, s, e, n] = <[f64; 4]>::deserialize(d)?;
        BBox::new(w, s, e, n).map_err(serde::de::Error::custom)
    }
}

impl FromStr for BBox {
    type Err = GeoError;

    /// Parses `west,south,east,north`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| GeoError::BBoxSyntax(format!("component is not a number ({e})")))?;
        if parts.len() != 4 {
            return Err(GeoError::BBoxSyntax(format!("got {} components", parts.len())));
        }
        BBox::new(parts[0], parts[1], parts[2], parts[3])
    }
}

/// Seven-level place taxonomy, ordered from coarsest to finest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocationType {
    Country,
    Province,
    Water,
    Municipality,
    Neighborhood,
    Road,
    Building,
}

impl LocationType {
    pub const ALL: [LocationType; 7] = [
        LocationType::Country,
        LocationType::Province,
        LocationType::Water,
        LocationType::Municipality,
        LocationType::Neighborhood,
        LocationType::Road,
        LocationType::Building,
    ];

    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn from_rank(rank: u8) -> Option<Self> {
        Self::ALL.get(rank as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            LocationType::Country => "Country",
            LocationType::Province => "Province",
            LocationType::Water => "Water",
            LocationType::Municipality => "Municipality",
            LocationType::Neighborhood => "Neighborhood",
            LocationType::Road => "Road",
            LocationType::Building => "Building",
        }
    }

    /// Lowercase form used inside feature URIs.
    pub fn slug(self) -> &'static str {
        match self {
            LocationType::Country => "country",
            LocationType::Province => "province",
            LocationType::Water => "water",
            LocationType::Municipality => "municipality",
            LocationType::Neighborhood => "neighborhood",
            LocationType::Road => "road",
            LocationType::Building => "building",
        }
    }

    /// Recovers the type from a `feat:<type>/<slug>/<n>` URI.
    pub fn from_uri(uri: &str) -> Option<Self> {
        let rest = uri.strip_prefix("feat:")?;
        let ty = rest.split('/').next()?;
        Self::ALL.into_iter().find(|t| t.slug() == ty)
    }
}

impl fmt::Display for LocationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LocationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown location type {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineString(Vec<GeoPoint>);

impl LineString {
    pub fn new(points: Vec<GeoPoint>) -> Result<Self, GeoError> {
        if points.len() < 2 {
            return Err(GeoError::ShortLineString(points.len()));
        }
        Ok(LineString(points))
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.0
    }

    fn segments(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }
}

/// A closed ring: at least four points, first equal to last.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring(Vec<GeoPoint>);

impl Ring {
    pub fn new(points: Vec<GeoPoint>) -> Result<Self, GeoError> {
        if points.len() < 4 {
            return Err(GeoError::ShortRing(points.len()));
        }
        if !points[0].approx_eq(&points[points.len() - 1]) {
            return Err(GeoError::OpenRing);
        }
        Ok(Ring(points))
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.0
    }

    fn segments(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    /// Shoelace signed area in square degrees.
    fn signed_area(&self) -> f64 {
        self.segments().map(|(a, b)| a.lon * b.lat - b.lon * a.lat).sum::<f64>() / 2.0
    }

    fn on_boundary(&self, p: GeoPoint) -> bool {
        self.segments().any(|(a, b)| point_on_segment(p, a, b))
    }

    /// Even-odd ray cast; callers handle the boundary separately.
    fn crossing_contains(&self, p: GeoPoint) -> bool {
        let mut inside = false;
        for (a, b) in self.segments() {
            if (a.lat > p.lat) != (b.lat > p.lat) {
                let x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
                if p.lon < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Ring,
    interiors: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring, interiors: Vec<Ring>) -> Self {
        Polygon { exterior, interiors }
    }

    /// Convenience constructor from raw rings; the first ring is the exterior.
    pub fn from_rings(mut rings: Vec<Vec<GeoPoint>>) -> Result<Self, GeoError> {
        if rings.is_empty() {
            return Err(GeoError::EmptyCollection("polygon"));
        }
        let exterior = Ring::new(rings.remove(0))?;
        let interiors = rings.into_iter().map(Ring::new).collect::<Result<_, _>>()?;
        Ok(Polygon { exterior, interiors })
    }

    pub fn exterior(&self) -> &Ring {
        &self.exterior
    }

    pub fn interiors(&self) -> &[Ring] {
        &self.interiors
    }

    fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.interiors.iter())
    }

    /// Point-in-polygon with the boundary (including hole boundaries)
    /// counted as inside.
    pub fn contains_point(&self, p: GeoPoint) -> bool {
        if self.rings().any(|r| r.on_boundary(p)) {
            return true;
        }
        self.exterior.crossing_contains(p) && !self.interiors.iter().any(|h| h.crossing_contains(p))
    }

    fn segments(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        self.rings().flat_map(|r| r.segments())
    }

    fn outer_area(&self) -> f64 {
        self.exterior.signed_area().abs()
    }

    fn outer_centroid(&self) -> GeoPoint {
        let ring = &self.exterior;
        let a = ring.signed_area();
        if a.abs() < 1e-18 {
            return vertex_mean(&ring.points()[..ring.points().len() - 1]);
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in ring.segments() {
            let cross = p.lon * q.lat - q.lon * p.lat;
            cx += (p.lon + q.lon) * cross;
            cy += (p.lat + q.lat) * cross;
        }
        clamp_into(
            GeoPoint {
                lon: cx / (6.0 * a),
                lat: cy / (6.0 * a),
            },
            &bbox_of_points(ring.points()),
        )
    }
}

macro_rules! non_empty_collection {
    ($name:ident, $item:ty, $label:literal) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<$item>);

        impl $name {
            pub fn new(items: Vec<$item>) -> Result<Self, GeoError> {
                if items.is_empty() {
                    return Err(GeoError::EmptyCollection($label));
                }
                Ok($name(items))
            }

            pub fn members(&self) -> &[$item] {
                &self.0
            }
        }
    };
}

non_empty_collection!(MultiPoint, GeoPoint, "multipoint");
non_empty_collection!(MultiLineString, LineString, "multilinestring");
non_empty_collection!(MultiPolygon, Polygon, "multipolygon");
non_empty_collection!(GeometryCollection, Geometry, "geometry collection");

/// A place footprint. Multi-part variants appear when the gazetteer merges
/// several OSM fragments into one feature; `Collection` only for merges of
/// mixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub enum Geometry {
    Point(GeoPoint),
    LineString(LineString),
    Polygon(Polygon),
    MultiPoint(MultiPoint),
    MultiLineString(MultiLineString),
    MultiPolygon(MultiPolygon),
    Collection(GeometryCollection),
}

/// Primitive pieces a geometry decomposes into for intersection tests.
#[derive(Clone, Copy)]
enum Part<'a> {
    Point(GeoPoint),
    Line(&'a LineString),
    Area(&'a Polygon),
}

impl<'a> Part<'a> {
    fn bbox(&self) -> BBox {
        match self {
            Part::Point(p) => BBox::of_point(*p),
            Part::Line(l) => bbox_of_points(l.points()),
            Part::Area(poly) => bbox_of_points(poly.exterior.points()),
        }
    }
}

impl Geometry {
    pub fn point(lon: f64, lat: f64) -> Result<Self, GeoError> {
        Ok(Geometry::Point(GeoPoint::new(lon, lat)?))
    }

    pub fn line_string(coords: &[(f64, f64)]) -> Result<Self, GeoError> {
        Ok(Geometry::LineString(LineString::new(points_from(coords)?)?))
    }

    /// Single-ring polygon from coordinates; the ring must already be closed.
    pub fn polygon(coords: &[(f64, f64)]) -> Result<Self, GeoError> {
        Ok(Geometry::Polygon(Polygon::new(
            Ring::new(points_from(coords)?)?,
            Vec::new(),
        )))
    }

    /// GeoJSON type name.
    pub fn kind(&self) -> &'static str {
        match self {
            Geometry::Point(_) => "Point",
            Geometry::LineString(_) => "LineString",
            Geometry::Polygon(_) => "Polygon",
            Geometry::MultiPoint(_) => "MultiPoint",
            Geometry::MultiLineString(_) => "MultiLineString",
            Geometry::MultiPolygon(_) => "MultiPolygon",
            Geometry::Collection(_) => "GeometryCollection",
        }
    }

    pub fn bbox(&self) -> BBox {
        let mut parts = self.parts().into_iter();
        let mut bb = parts.next().expect("geometry has at least one part").bbox();
        for part in parts {
            bb = bb.union(&part.bbox());
        }
        bb
    }

    fn parts(&self) -> Vec<Part<'_>> {
        let mut out = Vec::new();
        self.collect_parts(&mut out);
        out
    }

    fn collect_parts<'a>(&'a self, out: &mut Vec<Part<'a>>) {
        match self {
            Geometry::Point(p) => out.push(Part::Point(*p)),
            Geometry::LineString(l) => out.push(Part::Line(l)),
            Geometry::Polygon(p) => out.push(Part::Area(p)),
            Geometry::MultiPoint(m) => out.extend(m.members().iter().map(|p| Part::Point(*p))),
            Geometry::MultiLineString(m) => out.extend(m.members().iter().map(Part::Line)),
            Geometry::MultiPolygon(m) => out.extend(m.members().iter().map(Part::Area)),
            Geometry::Collection(c) => c.members().iter().for_each(|g| g.collect_parts(out)),
        }
    }

    /// Splits into single-part geometries (points, linestrings, polygons).
    pub fn primitives(&self) -> Vec<Geometry> {
        self.parts()
            .into_iter()
            .map(|p| match p {
                Part::Point(p) => Geometry::Point(p),
                Part::Line(l) => Geometry::LineString(l.clone()),
                Part::Area(a) => Geometry::Polygon(a.clone()),
            })
            .collect()
    }

    /// Highest topological dimension among the parts: 0 point, 1 line, 2 area.
    pub fn dimension(&self) -> u8 {
        self.parts()
            .iter()
            .map(|p| match p {
                Part::Point(_) => 0,
                Part::Line(_) => 1,
                Part::Area(_) => 2,
            })
            .max()
            .unwrap_or(0)
    }

    /// Combines geometries into the smallest multi-part container that holds
    /// them all without computing a geometric union.
    pub fn combine(geoms: &[Geometry]) -> Geometry {
        assert!(!geoms.is_empty(), "combine needs at least one geometry");
        if geoms.len() == 1 {
            return geoms[0].clone();
        }
        let prims: Vec<Geometry> = geoms.iter().flat_map(|g| g.primitives()).collect();
        if prims.iter().all(|g| matches!(g, Geometry::Point(_))) {
            let pts = prims
                .into_iter()
                .map(|g| match g {
                    Geometry::Point(p) => p,
                    _ => unreachable!(),
                })
                .collect();
            return Geometry::MultiPoint(MultiPoint(pts));
        }
        if prims.iter().all(|g| matches!(g, Geometry::LineString(_))) {
            let lines = prims
                .into_iter()
                .map(|g| match g {
                    Geometry::LineString(l) => l,
                    _ => unreachable!(),
                })
                .collect();
            return Geometry::MultiLineString(MultiLineString(lines));
        }
        if prims.iter().all(|g| matches!(g, Geometry::Polygon(_))) {
            let polys = prims
                .into_iter()
                .map(|g| match g {
                    Geometry::Polygon(p) => p,
                    _ => unreachable!(),
                })
                .collect();
            return Geometry::MultiPolygon(MultiPolygon(polys));
        }
        Geometry::Collection(GeometryCollection(prims))
    }

    pub fn intersects(&self, other: &Geometry) -> bool {
        geometries_intersect(self, other)
    }

    pub fn centroid(&self) -> GeoPoint {
        centroid(self)
    }
}

/// Smallest axis-aligned box containing every vertex of `g`.
pub fn bbox_of(g: &Geometry) -> BBox {
    g.bbox()
}

/// Exact intersection test with the bbox check as a pre-filter.
pub fn geometries_intersect(a: &Geometry, b: &Geometry) -> bool {
    if !a.bbox().intersects(&b.bbox()) {
        return false;
    }
    let pa = a.parts();
    let pb = b.parts();
    pa.iter().any(|x| {
        let xb = x.bbox();
        pb.iter().any(|y| xb.intersects(&y.bbox()) && parts_intersect(*x, *y))
    })
}

fn parts_intersect(a: Part<'_>, b: Part<'_>) -> bool {
    use Part::*;
    match (a, b) {
        (Point(p), Point(q)) => p.approx_eq(&q),
        (Point(p), Line(l)) | (Line(l), Point(p)) => l.segments().any(|(s, e)| point_on_segment(p, s, e)),
        (Point(p), Area(poly)) | (Area(poly), Point(p)) => poly.contains_point(p),
        (Line(l), Line(m)) => l
            .segments()
            .any(|(a1, a2)| m.segments().any(|(b1, b2)| segments_intersect(a1, a2, b1, b2))),
        (Line(l), Area(poly)) | (Area(poly), Line(l)) => {
            poly.contains_point(l.points()[0])
                || l.segments()
                    .any(|(a1, a2)| poly.segments().any(|(b1, b2)| segments_intersect(a1, a2, b1, b2)))
        }
        (Area(p), Area(q)) => {
            p.segments()
                .any(|(a1, a2)| q.segments().any(|(b1, b2)| segments_intersect(a1, a2, b1, b2)))
                || q.contains_point(p.exterior.points()[0])
                || p.contains_point(q.exterior.points()[0])
        }
    }
}

fn orient(a: GeoPoint, b: GeoPoint, c: GeoPoint) -> f64 {
    (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon)
}

fn within_segment_box(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool {
    p.lon >= a.lon.min(b.lon) - COORD_EPSILON
        && p.lon <= a.lon.max(b.lon) + COORD_EPSILON
        && p.lat >= a.lat.min(b.lat) - COORD_EPSILON
        && p.lat <= a.lat.max(b.lat) + COORD_EPSILON
}

/// True when `p` lies on segment `ab` within the boundary tolerance.
fn point_on_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool {
    if !within_segment_box(p, a, b) {
        return false;
    }
    let len = ((b.lon - a.lon).powi(2) + (b.lat - a.lat).powi(2)).sqrt();
    if len <= COORD_EPSILON {
        return p.approx_eq(&a);
    }
    // perpendicular distance
    orient(a, b, p).abs() / len <= COORD_EPSILON
}

fn segments_intersect(a1: GeoPoint, a2: GeoPoint, b1: GeoPoint, b2: GeoPoint) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    point_on_segment(a1, b1, b2)
        || point_on_segment(a2, b1, b2)
        || point_on_segment(b1, a1, a2)
        || point_on_segment(b2, a1, a2)
}

fn bbox_of_points(points: &[GeoPoint]) -> BBox {
    let mut bb = BBox::of_point(points[0]);
    for p in &points[1..] {
        bb.extend(*p);
    }
    bb
}

fn vertex_mean(points: &[GeoPoint]) -> GeoPoint {
    let n = points.len() as f64;
    GeoPoint {
        lon: points.iter().map(|p| p.lon).sum::<f64>() / n,
        lat: points.iter().map(|p| p.lat).sum::<f64>() / n,
    }
}

// Guards against rounding pushing a centroid a few ulps outside its box.
fn clamp_into(p: GeoPoint, bb: &BBox) -> GeoPoint {
    GeoPoint {
        lon: p.lon.clamp(bb.west, bb.east),
        lat: p.lat.clamp(bb.south, bb.north),
    }
}

fn line_centroid(lines: &[&LineString]) -> (GeoPoint, f64) {
    let (mut sx, mut sy, mut total) = (0.0, 0.0, 0.0);
    for l in lines {
        for (a, b) in l.segments() {
            let len = ((b.lon - a.lon).powi(2) + (b.lat - a.lat).powi(2)).sqrt();
            sx += (a.lon + b.lon) / 2.0 * len;
            sy += (a.lat + b.lat) / 2.0 * len;
            total += len;
        }
    }
    if total <= 0.0 {
        let pts: Vec<GeoPoint> = lines.iter().flat_map(|l| l.points().iter().copied()).collect();
        return (vertex_mean(&pts), 0.0);
    }
    (
        GeoPoint {
            lon: sx / total,
            lat: sy / total,
        },
        total,
    )
}

fn polygons_centroid(polys: &[&Polygon]) -> GeoPoint {
    let weighted: Vec<(GeoPoint, f64)> = polys.iter().map(|p| (p.outer_centroid(), p.outer_area())).collect();
    let total: f64 = weighted.iter().map(|(_, a)| a).sum();
    if total <= 0.0 {
        let pts: Vec<GeoPoint> = weighted.iter().map(|(c, _)| *c).collect();
        return vertex_mean(&pts);
    }
    GeoPoint {
        lon: weighted.iter().map(|(c, a)| c.lon * a).sum::<f64>() / total,
        lat: weighted.iter().map(|(c, a)| c.lat * a).sum::<f64>() / total,
    }
}

/// Planar centroid in lon/lat space. Lines are length weighted, polygons
/// area weighted over their outer rings. Mixed collections use their
/// highest-dimension parts.
pub fn centroid(g: &Geometry) -> GeoPoint {
    let parts = g.parts();
    let c = match g.dimension() {
        2 => {
            let polys: Vec<&Polygon> = parts
                .iter()
                .filter_map(|p| match p {
                    Part::Area(a) => Some(*a),
                    _ => None,
                })
                .collect();
            polygons_centroid(&polys)
        }
        1 => {
            let lines: Vec<&LineString> = parts
                .iter()
                .filter_map(|p| match p {
                    Part::Line(l) => Some(*l),
                    _ => None,
                })
                .collect();
            line_centroid(&lines).0
        }
        _ => {
            let pts: Vec<GeoPoint> = parts
                .iter()
                .filter_map(|p| match p {
                    Part::Point(p) => Some(*p),
                    _ => None,
                })
                .collect();
            vertex_mean(&pts)
        }
    };
    clamp_into(c, &g.bbox())
}

/// Great-circle distance in kilometres.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

fn points_from(coords: &[(f64, f64)]) -> Result<Vec<GeoPoint>, GeoError> {
    coords.iter().map(|&(x, y)| GeoPoint::new(x, y)).collect()
}

// GeoJSON wire form.

type Coords1 = Vec<GeoPoint>;
type Coords2 = Vec<Vec<GeoPoint>>;

#[derive(Serialize, Deserialize)]
#[serde(tag = "type")]
enum RawGeometry {
    Point { coordinates: GeoPoint },
    LineString { coordinates: Coords1 },
    Polygon { coordinates: Coords2 },
    MultiPoint { coordinates: Coords1 },
    MultiLineString { coordinates: Coords2 },
    MultiPolygon { coordinates: Vec<Coords2> },
    GeometryCollection { geometries: Vec<Geometry> },
}

impl TryFrom<RawGeometry> for Geometry {
    type Error = GeoError;

    fn try_from(raw: RawGeometry) -> Result<Self, Self::Error> {
        Ok(match raw {
            RawGeometry::Point { coordinates } => Geometry::Point(coordinates),
            RawGeometry::LineString { coordinates } => Geometry::LineString(LineString::new(coordinates)?),
            RawGeometry::Polygon { coordinates } => Geometry::Polygon(Polygon::from_rings(coordinates)?),
            RawGeometry::MultiPoint { coordinates } => Geometry::MultiPoint(MultiPoint::new(coordinates)?),
            RawGeometry::MultiLineString { coordinates } => Geometry::MultiLineString(MultiLineString::new(
                coordinates.into_iter().map(LineString::new).collect::<Result<_, _>>()?,
            )?),
            RawGeometry::MultiPolygon { coordinates } => Geometry::MultiPolygon(MultiPolygon::new(
                coordinates
                    .into_iter()
                    .map(Polygon::from_rings)
                    .collect::<Result<_, _>>()?,
            )?),
            RawGeometry::GeometryCollection { geometries } => {
                Geometry::Collection(GeometryCollection::new(geometries)?)
            }
        })
    }
}

fn polygon_rings(p: Polygon) -> Coords2 {
    std::iter::once(p.exterior.0)
        .chain(p.interiors.into_iter().map(|r| r.0))
        .collect()
}

impl From<Geometry> for RawGeometry {
    fn from(g: Geometry) -> Self {
        match g {
            Geometry::Point(p) => RawGeometry::Point { coordinates: p },
            Geometry::LineString(l) => RawGeometry::LineString { coordinates: l.0 },
            Geometry::Polygon(p) => RawGeometry::Polygon {
                coordinates: polygon_rings(p),
            },
            Geometry::MultiPoint(m) => RawGeometry::MultiPoint { coordinates: m.0 },
            Geometry::MultiLineString(m) => RawGeometry::MultiLineString {
                coordinates: m.0.into_iter().map(|l| l.0).collect(),
            },
            Geometry::MultiPolygon(m) => RawGeometry::MultiPolygon {
                coordinates: m.0.into_iter().map(polygon_rings).collect(),
            },
            Geometry::Collection(c) => RawGeometry::GeometryCollection { geometries: c.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum FeatureTag {
    Feature,
}

/// GeoJSON `Feature` envelope around typed properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoJsonFeature<P> {
    #[serde(rename = "type")]
    tag: FeatureTag,
    pub geometry: Geometry,
    pub properties: P,
}

impl<P> GeoJsonFeature<P> {
    pub fn new(geometry: Geometry, properties: P) -> Self {
        GeoJsonFeature {
            tag: FeatureTag::Feature,
            geometry,
            properties,
        }
    }
}
