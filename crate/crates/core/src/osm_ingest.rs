//! OSM XML ingestion.
//!
//! Reads an OSM 0.6 XML snapshot into [`OsmElement`]s and denormalizes them
//! into standalone [`RawFeature`]s: node references are resolved into
//! coordinates, multipolygon relations are stitched into rings, and each
//! element is typed through an editable [`RuleTable`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::geomodel::{GeoJsonFeature, GeoPoint, Geometry, LineString, LocationType, MultiPolygon, Polygon, Ring};

pub type Tags = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum OsmError {
    #[error("malformed OSM XML at byte {position}: {detail}")]
    MalformedXml { position: u64, detail: String },
    #[error("invalid location rule table: {0}")]
    InvalidRules(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OsmKind {
    Node,
    Way,
    Relation,
}

impl OsmKind {
    fn as_str(self) -> &'static str {
        match self {
            OsmKind::Node => "node",
            OsmKind::Way => "way",
            OsmKind::Relation => "relation",
        }
    }
}

impl FromStr for OsmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node" => Ok(OsmKind::Node),
            "way" => Ok(OsmKind::Way),
            "relation" => Ok(OsmKind::Relation),
            other => Err(format!("unknown OSM element kind {other:?}")),
        }
    }
}

/// Typed OSM identifier, written as `node/42`, `way/7`, `relation/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OsmId {
    pub kind: OsmKind,
    pub id: i64,
}

impl OsmId {
    pub fn new(kind: OsmKind, id: i64) -> Self {
        OsmId { kind, id }
    }
}

impl fmt::Display for OsmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind.as_str(), self.id)
    }
}

impl FromStr for OsmId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, id) = s
            .split_once('/')
            .ok_or_else(|| format!("OSM id {s:?} is not of the form kind/id"))?;
        let id = id.parse::<i64>().map_err(|e| format!("OSM id {s:?}: {e}"))?;
        Ok(OsmId::new(kind.parse()?, id))
    }
}

impl Serialize for OsmId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OsmId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub kind: OsmKind,
    pub id: i64,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OsmBody {
    Node { lon: f64, lat: f64 },
    Way { refs: Vec<i64> },
    Relation { members: Vec<Member> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsmElement {
    pub id: i64,
    pub tags: Tags,
    pub body: OsmBody,
}

impl OsmElement {
    pub fn kind(&self) -> OsmKind {
        match self.body {
            OsmBody::Node { .. } => OsmKind::Node,
            OsmBody::Way { .. } => OsmKind::Way,
            OsmBody::Relation { .. } => OsmKind::Relation,
        }
    }

    pub fn osm_id(&self) -> OsmId {
        OsmId::new(self.kind(), self.id)
    }
}

fn attrs(e: &BytesStart<'_>, reader_pos: u64) -> Result<HashMap<String, String>, OsmError> {
    let mut out = HashMap::new();
    for a in e.attributes() {
        let a = a.map_err(|err| OsmError::MalformedXml {
            position: reader_pos,
            detail: err.to_string(),
        })?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a
            .unescape_value()
            .map_err(|err| OsmError::MalformedXml {
                position: reader_pos,
                detail: err.to_string(),
            })?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn required<T: FromStr>(
    attrs: &HashMap<String, String>,
    key: &str,
    element: &str,
    position: u64,
) -> Result<T, OsmError> {
    let raw = attrs.get(key).ok_or_else(|| OsmError::MalformedXml {
        position,
        detail: format!("<{element}> without {key:?} attribute"),
    })?;
    raw.parse().map_err(|_| OsmError::MalformedXml {
        position,
        detail: format!("<{element}> has invalid {key}={raw:?}"),
    })
}

fn start_element(e: &BytesStart<'_>, position: u64) -> Result<Option<OsmElement>, OsmError> {
    let name = e.name();
    let name = name.as_ref();
    let body = match name {
        b"node" | b"way" | b"relation" => {
            let a = attrs(e, position)?;
            let element = std::str::from_utf8(name).unwrap_or("?");
            let id: i64 = required(&a, "id", element, position)?;
            let body = match name {
                b"node" => OsmBody::Node {
                    lon: required(&a, "lon", element, position)?,
                    lat: required(&a, "lat", element, position)?,
                },
                b"way" => OsmBody::Way { refs: Vec::new() },
                _ => OsmBody::Relation { members: Vec::new() },
            };
            Some(OsmElement {
                id,
                tags: Tags::new(),
                body,
            })
        }
        _ => None,
    };
    Ok(body)
}

fn child_element(e: &BytesStart<'_>, current: &mut OsmElement, position: u64) -> Result<(), OsmError> {
    match e.name().as_ref() {
        b"tag" => {
            let a = attrs(e, position)?;
            let k: String = required(&a, "k", "tag", position)?;
            let v: String = required(&a, "v", "tag", position)?;
            current.tags.insert(k, v);
        }
        b"nd" => {
            let a = attrs(e, position)?;
            let r: i64 = required(&a, "ref", "nd", position)?;
            if let OsmBody::Way { refs } = &mut current.body {
                refs.push(r);
            }
        }
        b"member" => {
            let a = attrs(e, position)?;
            let kind: String = required(&a, "type", "member", position)?;
            let kind = kind
                .parse()
                .map_err(|detail| OsmError::MalformedXml { position, detail })?;
            let id: i64 = required(&a, "ref", "member", position)?;
            let role = a.get("role").cloned().unwrap_or_default();
            if let OsmBody::Relation { members } = &mut current.body {
                members.push(Member { kind, id, role });
            }
        }
        _ => {}
    }
    Ok(())
}

struct Collector {
    out: Vec<OsmElement>,
    seen: HashSet<OsmId>,
}

impl Collector {
    fn push(&mut self, el: OsmElement) {
        let id = el.osm_id();
        let empty = match &el.body {
            OsmBody::Way { refs } => refs.is_empty(),
            OsmBody::Relation { members } => members.is_empty(),
            OsmBody::Node { .. } => false,
        };
        if empty {
            warn!(%id, "skipping element without node refs or members");
        } else if !self.seen.insert(id) {
            warn!(%id, "duplicate OSM id, keeping the first occurrence");
        } else {
            self.out.push(el);
        }
    }
}

/// Parses an OSM XML stream into elements in document order.
pub fn parse_osm_xml<R: BufRead>(input: R) -> Result<Vec<OsmElement>, OsmError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().check_end_names = true;
    let mut buf = Vec::new();
    let mut depth = 0usize;
    let mut current: Option<(OsmElement, usize)> = None;
    let mut collector = Collector {
        out: Vec::new(),
        seen: HashSet::new(),
    };

    loop {
        let event = reader.read_event_into(&mut buf).map_err(|e| OsmError::MalformedXml {
            position: reader.error_position(),
            detail: e.to_string(),
        })?;
        let pos = reader.buffer_position();
        match event {
            Event::Start(e) => {
                depth += 1;
                match &mut current {
                    Some((el, _)) => child_element(&e, el, pos)?,
                    None => {
                        if let Some(el) = start_element(&e, pos)? {
                            current = Some((el, depth));
                        }
                    }
                }
            }
            Event::Empty(e) => match &mut current {
                Some((el, _)) => child_element(&e, el, pos)?,
                None => {
                    if let Some(el) = start_element(&e, pos)? {
                        collector.push(el);
                    }
                }
            },
            Event::End(_) => {
                if let Some((_, d)) = &current {
                    if *d == depth {
                        let (el, _) = current.take().expect("checked above");
                        collector.push(el);
                    }
                }
                depth = depth.saturating_sub(1);
            }
            Event::Eof => {
                if depth != 0 {
                    return Err(OsmError::MalformedXml {
                        position: pos,
                        detail: "unexpected end of document inside an open element".into(),
                    });
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }
    Ok(collector.out)
}

pub fn parse_osm_file(path: &Path) -> Result<Vec<OsmElement>, OsmError> {
    let f = std::fs::File::open(path)?;
    parse_osm_xml(std::io::BufReader::new(f))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Condition {
    key: Option<String>,
    values: Option<Vec<String>>,
    min: Option<i64>,
    max: Option<i64>,
    area: Option<bool>,
}

impl Condition {
    fn holds(&self, tags: &Tags, is_area: bool) -> bool {
        if let Some(area) = self.area {
            if area != is_area {
                return false;
            }
        }
        let Some(key) = &self.key else {
            return true;
        };
        let Some(value) = tags.get(key) else {
            return false;
        };
        if let Some(values) = &self.values {
            if !values.iter().any(|v| v == value) {
                return false;
            }
        }
        if self.min.is_some() || self.max.is_some() {
            let Ok(n) = value.trim().parse::<i64>() else {
                return false;
            };
            if self.min.is_some_and(|m| n < m) || self.max.is_some_and(|m| n > m) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Rule {
    #[serde(rename = "type")]
    loc_type: LocationType,
    all: Vec<Condition>,
}

/// Ordered tag rules mapping OSM tags onto the seven location types.
#[derive(Debug, Clone, Deserialize)]
pub struct RuleTable {
    #[serde(rename = "rule")]
    rules: Vec<Rule>,
}

const DEFAULT_RULES: &str = include_str!("../data/location_rules.toml");

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable::from_toml(DEFAULT_RULES).expect("bundled rule table parses")
    }
}

impl RuleTable {
    pub fn from_toml(src: &str) -> Result<Self, OsmError> {
        toml::from_str(src).map_err(|e| OsmError::InvalidRules(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, OsmError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// First matching rule's type, or `None` when the element is not a place.
    pub fn classify(&self, tags: &Tags, is_area: bool) -> Option<LocationType> {
        self.rules
            .iter()
            .find(|r| r.all.iter().all(|c| c.holds(tags, is_area)))
            .map(|r| r.loc_type)
    }
}

/// Classifies with the bundled rule table.
pub fn classify_location_type(tags: &Tags, is_area: bool) -> Option<LocationType> {
    static TABLE: std::sync::OnceLock<RuleTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(RuleTable::default).classify(tags, is_area)
}

/// A denormalized, typed, named place candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeature {
    pub source_ids: Vec<OsmId>,
    pub geometry: Geometry,
    pub loc_type: LocationType,
    pub primary_name: String,
    pub alt_names: Vec<String>,
    pub tags: Tags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawFeatureProps {
    loc_type: LocationType,
    primary_name: String,
    alt_names: Vec<String>,
    source_ids: Vec<OsmId>,
    tags: Tags,
}

impl RawFeature {
    pub fn to_geojson(&self) -> String {
        let f = GeoJsonFeature::new(
            self.geometry.clone(),
            RawFeatureProps {
                loc_type: self.loc_type,
                primary_name: self.primary_name.clone(),
                alt_names: self.alt_names.clone(),
                source_ids: self.source_ids.clone(),
                tags: self.tags.clone(),
            },
        );
        serde_json::to_string(&f).expect("raw feature serializes")
    }

    pub fn from_geojson(line: &str) -> Result<Self, serde_json::Error> {
        let f: GeoJsonFeature<RawFeatureProps> = serde_json::from_str(line)?;
        let p = f.properties;
        if p.primary_name.trim().is_empty() || p.source_ids.is_empty() {
            return Err(serde::de::Error::custom(
                "raw feature needs a primary name and at least one source id",
            ));
        }
        Ok(RawFeature {
            source_ids: p.source_ids,
            geometry: f.geometry,
            loc_type: p.loc_type,
            primary_name: p.primary_name,
            alt_names: p.alt_names,
            tags: p.tags,
        })
    }
}

const ALT_NAME_KEYS: [&str; 3] = ["alt_name", "old_name", "loc_name"];

/// `(primary, alternates)`; alternates come from `name:*`, `alt_name`,
/// `old_name` and `loc_name`, split on ';'.
fn extract_names(tags: &Tags) -> Option<(String, Vec<String>)> {
    let primary = tags.get("name")?.trim().to_string();
    if primary.is_empty() {
        return None;
    }
    let mut alts: Vec<String> = Vec::new();
    for (k, v) in tags {
        if k.starts_with("name:") || ALT_NAME_KEYS.contains(&k.as_str()) {
            for part in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                if part != primary && !alts.iter().any(|a| a == part) {
                    alts.push(part.to_string());
                }
            }
        }
    }
    Some((primary, alts))
}

#[derive(Debug, Error)]
#[error("ring assembly failed for relation {relation}: {detail}")]
pub struct RingAssemblyFailure {
    pub relation: i64,
    pub detail: String,
}

struct Scratch<'a> {
    nodes: HashMap<i64, GeoPoint>,
    ways: HashMap<i64, &'a [i64]>,
}

impl<'a> Scratch<'a> {
    fn build(elements: &'a [OsmElement]) -> Self {
        let mut nodes = HashMap::new();
        let mut ways = HashMap::new();
        for el in elements {
            match &el.body {
                OsmBody::Node { lon, lat } => match GeoPoint::new(*lon, *lat) {
                    Ok(p) => {
                        nodes.insert(el.id, p);
                    }
                    Err(e) => warn!(node = el.id, "dropping node: {e}"),
                },
                OsmBody::Way { refs } => {
                    ways.insert(el.id, refs.as_slice());
                }
                OsmBody::Relation { .. } => {}
            }
        }
        Scratch { nodes, ways }
    }

    fn resolve(&self, refs: &[i64]) -> Option<Vec<GeoPoint>> {
        refs.iter().map(|r| self.nodes.get(r).copied()).collect()
    }
}

fn way_geometry(refs: &[i64], scratch: &Scratch<'_>, id: i64) -> Option<Geometry> {
    let Some(points) = scratch.resolve(refs) else {
        warn!(way = id, "dropping way with dangling node refs");
        return None;
    };
    let closed = refs.len() > 1 && refs.first() == refs.last();
    let g = if closed {
        Ring::new(points).map(|r| Geometry::Polygon(Polygon::new(r, Vec::new())))
    } else {
        LineString::new(points).map(Geometry::LineString)
    };
    match g {
        Ok(g) => Some(g),
        Err(e) => {
            warn!(way = id, "dropping way: {e}");
            None
        }
    }
}

fn is_closed_area(refs: &[i64]) -> bool {
    refs.len() >= 4 && refs.first() == refs.last()
}

/// Joins way node sequences end to end into closed rings. Candidates are
/// tried in input order, so the result is deterministic.
fn stitch_rings(mut pieces: Vec<Vec<i64>>) -> Result<Vec<Vec<i64>>, String> {
    let mut rings = Vec::new();
    while !pieces.is_empty() {
        let mut ring = pieces.remove(0);
        while ring.first() != ring.last() || ring.len() < 2 {
            let end = *ring.last().expect("non-empty ring");
            let Some(pos) = pieces
                .iter()
                .position(|p| p.first() == Some(&end) || p.last() == Some(&end))
            else {
                return Err(format!("open ring ending at node {end}"));
            };
            let mut next = pieces.remove(pos);
            if next.first() != Some(&end) {
                next.reverse();
            }
            ring.extend_from_slice(&next[1..]);
        }
        rings.push(ring);
    }
    Ok(rings)
}

fn assemble_multipolygon(
    relation: i64,
    members: &[Member],
    scratch: &Scratch<'_>,
) -> Result<Geometry, RingAssemblyFailure> {
    let fail = |detail: String| RingAssemblyFailure { relation, detail };
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    for m in members.iter().filter(|m| m.kind == OsmKind::Way) {
        let refs = scratch
            .ways
            .get(&m.id)
            .ok_or_else(|| fail(format!("member way {} missing", m.id)))?;
        match m.role.as_str() {
            "inner" => inner.push(refs.to_vec()),
            "outer" | "" => outer.push(refs.to_vec()),
            _ => {}
        }
    }
    if outer.is_empty() {
        return Err(fail("no outer ways".into()));
    }
    let to_ring = |ids: Vec<i64>| -> Result<Ring, RingAssemblyFailure> {
        let pts = scratch
            .resolve(&ids)
            .ok_or_else(|| fail("dangling node ref in member way".into()))?;
        Ring::new(pts).map_err(|e| fail(e.to_string()))
    };
    let outers: Vec<Ring> = stitch_rings(outer)
        .map_err(fail)?
        .into_iter()
        .map(to_ring)
        .collect::<Result<_, _>>()?;
    let inners: Vec<Ring> = stitch_rings(inner)
        .map_err(fail)?
        .into_iter()
        .map(to_ring)
        .collect::<Result<_, _>>()?;

    let mut holes: Vec<Vec<Ring>> = vec![Vec::new(); outers.len()];
    for hole in inners {
        let probe = hole.points()[0];
        let owner = outers
            .iter()
            .position(|o| Polygon::new(o.clone(), Vec::new()).contains_point(probe))
            .ok_or_else(|| fail("inner ring outside every outer ring".into()))?;
        holes[owner].push(hole);
    }
    let polys = outers.into_iter().zip(holes).map(|(o, h)| Polygon::new(o, h)).collect();
    Ok(Geometry::MultiPolygon(
        MultiPolygon::new(polys).map_err(|e| fail(e.to_string()))?,
    ))
}

/// Turns normalized OSM elements into standalone features. Elements without
/// a name or a matching type rule are dropped, as are ways with dangling
/// node refs and relations whose rings cannot be assembled.
pub fn denormalize(elements: &[OsmElement], rules: &RuleTable) -> Vec<RawFeature> {
    let scratch = Scratch::build(elements);
    let mut out = Vec::new();
    for el in elements {
        let Some((primary_name, alt_names)) = extract_names(&el.tags) else {
            continue;
        };
        let geometry = match &el.body {
            OsmBody::Node { .. } => {
                let Some(p) = scratch.nodes.get(&el.id) else {
                    continue;
                };
                if rules.classify(&el.tags, false).is_none() {
                    continue;
                }
                Geometry::Point(*p)
            }
            OsmBody::Way { refs } => {
                if rules.classify(&el.tags, is_closed_area(refs)).is_none() {
                    continue;
                }
                match way_geometry(refs, &scratch, el.id) {
                    Some(g) => g,
                    None => continue,
                }
            }
            OsmBody::Relation { members } => {
                let rel_type = el.tags.get("type").map(String::as_str);
                if !matches!(rel_type, Some("multipolygon") | Some("boundary")) {
                    continue;
                }
                if rules.classify(&el.tags, true).is_none() {
                    continue;
                }
                match assemble_multipolygon(el.id, members, &scratch) {
                    Ok(g) => g,
                    Err(e) => {
                        warn!("{e}");
                        continue;
                    }
                }
            }
        };
        let is_area = geometry.dimension() == 2;
        let Some(loc_type) = rules.classify(&el.tags, is_area) else {
            continue;
        };
        out.push(RawFeature {
            source_ids: vec![el.osm_id()],
            geometry,
            loc_type,
            primary_name,
            alt_names,
            tags: el.tags.clone(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(pairs: &[(&str, &str)]) -> Tags {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn parse(xml: &str) -> Vec<OsmElement> {
        parse_osm_xml(xml.as_bytes()).unwrap()
    }

    #[test]
    fn single_node() {
        let els = parse(r#"<osm version="0.6"><node id="1" lat="52" lon="4"><tag k="name" v="Dam"/></node></osm>"#);
        assert_eq!(
            els,
            vec![OsmElement {
                id: 1,
                tags: tags(&[("name", "Dam")]),
                body: OsmBody::Node { lon: 4.0, lat: 52.0 },
            }]
        );
    }

    #[test]
    fn empty_document() {
        assert!(parse("<osm/>").is_empty());
        assert!(parse(r#"<?xml version="1.0"?><osm version="0.6"></osm>"#).is_empty());
    }

    #[test]
    fn malformed_documents_report_position() {
        for bad in [
            r#"<osm><node id="1" lat="52" lon="4"></way></osm>"#,
            r#"<osm><node id="1" lat="52" lon="4">"#,
            r#"<osm><node id="x" lat="52" lon="4"/></osm>"#,
            r#"<osm><node id="1" lat="52"/></osm>"#,
        ] {
            match parse_osm_xml(bad.as_bytes()) {
                Err(OsmError::MalformedXml { .. }) => {}
                other => panic!("{bad}: expected MalformedXml, got {other:?}"),
            }
        }
    }

    #[test]
    fn duplicates_keep_first() {
        let els = parse(
            r#"<osm><node id="1" lat="1" lon="1"/><node id="1" lat="2" lon="2"/><way id="1"><nd ref="1"/></way></osm>"#,
        );
        assert_eq!(els.len(), 2);
        assert_eq!(els[0].body, OsmBody::Node { lon: 1.0, lat: 1.0 });
        assert_eq!(els[1].kind(), OsmKind::Way);
    }

    #[test]
    fn unknown_elements_are_skipped() {
        let els = parse(
            r#"<osm><bounds minlat="0" minlon="0" maxlat="1" maxlon="1"/><changeset id="3"><tag k="a" v="b"/></changeset><node id="5" lat="0" lon="0"/></osm>"#,
        );
        assert_eq!(els.len(), 1);
        assert!(els[0].tags.is_empty());
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_location_type(&tags(&[("highway", "residential"), ("name", "Kerkstraat")]), false),
            Some(LocationType::Road)
        );
        assert_eq!(classify_location_type(&tags(&[("shop", "bakery")]), false), None);
        assert_eq!(
            classify_location_type(&tags(&[("place", "city"), ("name", "Utrecht")]), false),
            Some(LocationType::Municipality)
        );
    }

    #[test]
    fn classification_rule_order_and_ranges() {
        let admin = |lvl: &str| tags(&[("boundary", "administrative"), ("admin_level", lvl)]);
        assert_eq!(classify_location_type(&admin("2"), true), Some(LocationType::Province));
        assert_eq!(classify_location_type(&admin("4"), true), Some(LocationType::Province));
        assert_eq!(classify_location_type(&admin("6"), true), None);
        assert_eq!(
            classify_location_type(&admin("8"), true),
            Some(LocationType::Municipality)
        );
        assert_eq!(classify_location_type(&admin("11"), true), None);
        assert_eq!(
            classify_location_type(&tags(&[("place", "country")]), true),
            Some(LocationType::Country)
        );
        assert_eq!(
            classify_location_type(&tags(&[("waterway", "canal")]), false),
            Some(LocationType::Water)
        );
        assert_eq!(
            classify_location_type(&tags(&[("place", "quarter")]), false),
            Some(LocationType::Neighborhood)
        );
        // amenities only become buildings when they have an area
        assert_eq!(classify_location_type(&tags(&[("amenity", "school")]), false), None);
        assert_eq!(
            classify_location_type(&tags(&[("amenity", "school")]), true),
            Some(LocationType::Building)
        );
    }

    #[test]
    fn custom_rule_table() {
        let t = RuleTable::from_toml(
            r#"
[[rule]]
type = "Water"
all = [{ key = "landuse", values = ["reservoir"] }]
"#,
        )
        .unwrap();
        assert_eq!(
            t.classify(&tags(&[("landuse", "reservoir")]), true),
            Some(LocationType::Water)
        );
        assert_eq!(t.classify(&tags(&[("highway", "primary")]), false), None);
        assert!(RuleTable::from_toml("[[rule]]\ntype = \"Town\"\nall = []").is_err());
    }

    const NODES: &str = r#"
        <node id="1" lat="0" lon="0"/>
        <node id="2" lat="0" lon="1"/>
        <node id="3" lat="1" lon="1"/>
        <node id="4" lat="1" lon="0"/>"#;

    #[test]
    fn open_way_becomes_linestring() {
        let els = parse(&format!(
            r#"<osm>{NODES}<way id="10"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/><tag k="name" v="A"/></way></osm>"#
        ));
        let feats = denormalize(&els, &RuleTable::default());
        assert_eq!(feats.len(), 1);
        assert_eq!(
            feats[0].geometry,
            Geometry::line_string(&[(0.0, 0.0), (1.0, 0.0)]).unwrap()
        );
        assert_eq!(feats[0].loc_type, LocationType::Road);
        assert_eq!(feats[0].primary_name, "A");
        assert_eq!(feats[0].source_ids, vec![OsmId::new(OsmKind::Way, 10)]);
    }

    #[test]
    fn closed_way_becomes_polygon() {
        let els = parse(&format!(
            r#"<osm>{NODES}<way id="11"><nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="1"/><tag k="building" v="yes"/><tag k="name" v="Stadhuis"/></way></osm>"#
        ));
        let feats = denormalize(&els, &RuleTable::default());
        assert_eq!(feats.len(), 1);
        match &feats[0].geometry {
            Geometry::Polygon(p) => {
                assert_eq!(p.exterior().points().len(), 4);
                assert_eq!(p.exterior().points()[0], p.exterior().points()[3]);
            }
            g => panic!("expected polygon, got {}", g.kind()),
        }
        assert_eq!(feats[0].loc_type, LocationType::Building);
    }

    #[test]
    fn nameless_untyped_and_dangling_are_dropped() {
        let els = parse(&format!(
            r#"<osm>{NODES}
            <way id="20"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/></way>
            <way id="21"><nd ref="1"/><nd ref="2"/><tag k="shop" v="bakery"/><tag k="name" v="Bakker"/></way>
            <way id="22"><nd ref="1"/><nd ref="99"/><tag k="highway" v="residential"/><tag k="name" v="Gone"/></way>
            </osm>"#
        ));
        assert!(denormalize(&els, &RuleTable::default()).is_empty());
    }

    #[test]
    fn names_collect_alternates() {
        let t = tags(&[
            ("name", "Den Haag"),
            ("name:fr", "La Haye"),
            ("old_name", "'s-Gravenhage;Die Haghe"),
            ("alt_name", "Den Haag"),
            ("loc_name", "Haagje"),
        ]);
        let (p, alts) = extract_names(&t).unwrap();
        assert_eq!(p, "Den Haag");
        assert_eq!(alts, vec!["Haagje", "La Haye", "'s-Gravenhage", "Die Haghe"]);
        assert!(extract_names(&tags(&[("name", "  ")])).is_none());
    }

    #[test]
    fn multipolygon_rings_are_stitched() {
        let els = parse(&format!(
            r#"<osm>{NODES}
            <way id="30"><nd ref="1"/><nd ref="2"/><nd ref="3"/></way>
            <way id="31"><nd ref="1"/><nd ref="4"/><nd ref="3"/></way>
            <relation id="40"><member type="way" ref="30" role="outer"/><member type="way" ref="31" role="outer"/>
              <tag k="type" v="multipolygon"/><tag k="natural" v="water"/><tag k="name" v="Plas"/></relation>
            </osm>"#
        ));
        let feats = denormalize(&els, &RuleTable::default());
        assert_eq!(feats.len(), 1);
        let Geometry::MultiPolygon(mp) = &feats[0].geometry else {
            panic!("expected multipolygon");
        };
        assert_eq!(mp.members().len(), 1);
        let ring: Vec<(f64, f64)> = mp.members()[0]
            .exterior()
            .points()
            .iter()
            .map(|p| (p.lon(), p.lat()))
            .collect();
        assert_eq!(ring, vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)]);
        assert_eq!(feats[0].loc_type, LocationType::Water);
    }

    #[test]
    fn broken_multipolygon_is_dropped() {
        let els = parse(&format!(
            r#"<osm>{NODES}
            <way id="30"><nd ref="1"/><nd ref="2"/><nd ref="3"/></way>
            <relation id="40"><member type="way" ref="30" role="outer"/>
              <tag k="type" v="multipolygon"/><tag k="natural" v="water"/><tag k="name" v="Plas"/></relation>
            </osm>"#
        ));
        assert!(denormalize(&els, &RuleTable::default()).is_empty());
        let scratch = Scratch::build(&els);
        let OsmBody::Relation { members } = &els[5].body else {
            panic!()
        };
        let err = assemble_multipolygon(40, members, &scratch).unwrap_err();
        assert_eq!(err.relation, 40);
    }

    #[test]
    fn geojson_round_trip() {
        let f = RawFeature {
            source_ids: vec![OsmId::new(OsmKind::Way, 7)],
            geometry: Geometry::line_string(&[(4.1, 52.0), (4.2, 52.1)]).unwrap(),
            loc_type: LocationType::Road,
            primary_name: "Kerkstraat".into(),
            alt_names: vec!["Kerkweg".into()],
            tags: tags(&[("highway", "residential"), ("name", "Kerkstraat")]),
        };
        let line = f.to_geojson();
        assert!(line.starts_with(r#"{"type":"Feature","geometry":{"type":"LineString""#));
        assert_eq!(RawFeature::from_geojson(&line).unwrap(), f);
    }

    #[test]
    fn osm_id_text_form() {
        let id: OsmId = "relation/12".parse().unwrap();
        assert_eq!(id, OsmId::new(OsmKind::Relation, 12));
        assert_eq!(id.to_string(), "relation/12");
        assert!("area/1".parse::<OsmId>().is_err());
        assert!(OsmId::new(OsmKind::Node, 9) < OsmId::new(OsmKind::Way, 1));
    }
}
