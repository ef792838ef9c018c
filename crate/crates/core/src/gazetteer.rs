//! The place gazetteer.
//!
//! Raw OSM-derived features of the same type that share a name and touch
//! each other are merged into one canonical feature, each feature gets a
//! stable `feat:<type>/<slug>/<n>` URI, and every known name (including
//! historic and alternate names) is indexed in normalized form.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomodel::{BBox, GeoJsonFeature, GeoPoint, Geometry, LocationType};
use crate::osm_ingest::{OsmId, RawFeature};
use crate::text::{normalize, slug};

pub const FEATURES_FILE: &str = "features.ndjson";
pub const NAMES_FILE: &str = "names.tsv";

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("corrupt gazetteer file {file}, line {line}: {detail}")]
    CorruptFile { file: String, line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GazetteerFeature {
    pub uri: String,
    pub loc_type: LocationType,
    pub primary_name: String,
    pub all_names: BTreeSet<String>,
    pub geometry: Geometry,
    pub bbox: BBox,
    pub source_ids: BTreeSet<OsmId>,
    pub centroid: GeoPoint,
}

/// A merged feature that has not been given a URI yet.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedFeature {
    pub loc_type: LocationType,
    pub primary_name: String,
    pub all_names: BTreeSet<String>,
    pub geometry: Geometry,
    pub source_ids: BTreeSet<OsmId>,
}

impl MergedFeature {
    fn min_source(&self) -> OsmId {
        *self.source_ids.iter().next().expect("non-empty source ids")
    }

    fn normalized_names(&self) -> BTreeSet<String> {
        self.all_names.iter().map(|n| normalize(n)).collect()
    }
}

impl From<&RawFeature> for MergedFeature {
    fn from(r: &RawFeature) -> Self {
        let mut all_names: BTreeSet<String> = r.alt_names.iter().cloned().collect();
        all_names.insert(r.primary_name.clone());
        MergedFeature {
            loc_type: r.loc_type,
            primary_name: r.primary_name.clone(),
            all_names,
            geometry: r.geometry.clone(),
            source_ids: r.source_ids.iter().copied().collect(),
        }
    }
}

impl From<&GazetteerFeature> for MergedFeature {
    fn from(f: &GazetteerFeature) -> Self {
        MergedFeature {
            loc_type: f.loc_type,
            primary_name: f.primary_name.clone(),
            all_names: f.all_names.clone(),
            geometry: f.geometry.clone(),
            source_ids: f.source_ids.clone(),
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Merges features into connected components of the relation "same type,
/// some shared normalized name, geometries intersect", iterated until no
/// two merged features satisfy it any more.
///
/// Output is sorted by (type rank, primary name, smallest source id).
pub fn merge_features(items: Vec<MergedFeature>) -> Vec<MergedFeature> {
    let n = items.len();
    let names: Vec<BTreeSet<String>> = items.iter().map(|f| f.normalized_names()).collect();
    let bboxes: Vec<BBox> = items.iter().map(|f| f.geometry.bbox()).collect();
    let mut uf = UnionFind::new(n);
    let mut dirty: BTreeSet<usize> = (0..n).collect();

    while !dirty.is_empty() {
        // component -> (members, names, bbox)
        let mut comps: BTreeMap<usize, (Vec<usize>, BTreeSet<&str>, BBox)> = BTreeMap::new();
        for i in 0..n {
            let root = uf.find(i);
            let entry = comps
                .entry(root)
                .or_insert_with(|| (Vec::new(), BTreeSet::new(), bboxes[i]));
            entry.0.push(i);
            entry.1.extend(names[i].iter().map(String::as_str));
            entry.2 = entry.2.union(&bboxes[i]);
        }
        let mut buckets: HashMap<(LocationType, &str), Vec<usize>> = HashMap::new();
        for (root, (members, cnames, _)) in &comps {
            for name in cnames {
                buckets
                    .entry((items[members[0]].loc_type, name))
                    .or_default()
                    .push(*root);
            }
        }
        let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        for roots in buckets.values() {
            for (i, &a) in roots.iter().enumerate() {
                for &b in &roots[i + 1..] {
                    if dirty.contains(&a) || dirty.contains(&b) {
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
        let mut next_dirty = BTreeSet::new();
        for (a, b) in pairs {
            if uf.find(a) == uf.find(b) {
                continue;
            }
            let (ma, _, ba) = &comps[&a];
            let (mb, _, bb) = &comps[&b];
            if !ba.intersects(bb) {
                continue;
            }
            let touching = ma.iter().any(|&i| {
                mb.iter()
                    .any(|&j| bboxes[i].intersects(&bboxes[j]) && items[i].geometry.intersects(&items[j].geometry))
            });
            if touching {
                uf.union(a, b);
                next_dirty.insert(uf.find(a));
            }
        }
        dirty = next_dirty.into_iter().map(|r| uf.find(r)).collect();
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut out: Vec<MergedFeature> = groups
        .into_values()
        .map(|members| combine(members.iter().map(|&i| &items[i]).collect()))
        .collect();
    out.sort_by(|a, b| {
        (a.loc_type, &a.primary_name, a.min_source()).cmp(&(b.loc_type, &b.primary_name, b.min_source()))
    });
    out
}

fn combine(mut members: Vec<&MergedFeature>) -> MergedFeature {
    members.sort_by_key(|m| m.min_source());
    let first = members[0];
    if members.len() == 1 {
        return first.clone();
    }
    let geoms: Vec<Geometry> = members.iter().map(|m| m.geometry.clone()).collect();
    MergedFeature {
        loc_type: first.loc_type,
        primary_name: first.primary_name.clone(),
        all_names: members.iter().flat_map(|m| m.all_names.iter().cloned()).collect(),
        geometry: Geometry::combine(&geoms),
        source_ids: members.iter().flat_map(|m| m.source_ids.iter().copied()).collect(),
    }
}

/// Merges raw OSM features.
pub fn merge_raw(raw: &[RawFeature]) -> Vec<MergedFeature> {
    merge_features(raw.iter().map(MergedFeature::from).collect())
}

/// Gives every feature its URI. Features sharing a type and slug are
/// numbered in order of their sorted source ids. Output is sorted by
/// (type rank, primary name, uri).
pub fn assign_uris(features: Vec<MergedFeature>) -> Vec<GazetteerFeature> {
    let mut by_key: BTreeMap<(LocationType, String), Vec<MergedFeature>> = BTreeMap::new();
    for f in features {
        by_key.entry((f.loc_type, slug(&f.primary_name))).or_default().push(f);
    }
    let mut out = Vec::new();
    for ((ty, s), mut group) in by_key {
        group.sort_by(|a, b| a.source_ids.iter().cmp(b.source_ids.iter()));
        for (ordinal, f) in group.into_iter().enumerate() {
            let uri = format!("feat:{}/{}/{}", ty.slug(), s, ordinal);
            out.push(GazetteerFeature::new(uri, f));
        }
    }
    out.sort_by(|a, b| (a.loc_type, &a.primary_name, &a.uri).cmp(&(b.loc_type, &b.primary_name, &b.uri)));
    out
}

impl GazetteerFeature {
    fn new(uri: String, f: MergedFeature) -> Self {
        GazetteerFeature {
            uri,
            loc_type: f.loc_type,
            bbox: f.geometry.bbox(),
            centroid: f.geometry.centroid(),
            primary_name: f.primary_name,
            all_names: f.all_names,
            geometry: f.geometry,
            source_ids: f.source_ids,
        }
    }

    pub fn to_geojson(&self) -> GeoJsonFeature<FeatureProps> {
        GeoJsonFeature::new(
            self.geometry.clone(),
            FeatureProps {
                uri: self.uri.clone(),
                loc_type: self.loc_type,
                primary_name: self.primary_name.clone(),
                alt_names: self
                    .all_names
                    .iter()
                    .filter(|n| **n != self.primary_name)
                    .cloned()
                    .collect(),
                source_ids: self.source_ids.iter().copied().collect(),
            },
        )
    }

    pub fn from_geojson(f: GeoJsonFeature<FeatureProps>) -> Result<Self, String> {
        let p = f.properties;
        if p.primary_name.trim().is_empty() {
            return Err("empty primary_name".into());
        }
        if p.source_ids.is_empty() {
            return Err("feature without source_ids".into());
        }
        if LocationType::from_uri(&p.uri) != Some(p.loc_type) {
            return Err(format!("uri {:?} does not match loc_type {}", p.uri, p.loc_type));
        }
        let mut all_names: BTreeSet<String> = p.alt_names.into_iter().collect();
        all_names.insert(p.primary_name.clone());
        Ok(GazetteerFeature::new(
            p.uri,
            MergedFeature {
                loc_type: p.loc_type,
                primary_name: p.primary_name,
                all_names,
                geometry: f.geometry,
                source_ids: p.source_ids.into_iter().collect(),
            },
        ))
    }
}

/// GeoJSON properties of a persisted gazetteer feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureProps {
    pub uri: String,
    pub loc_type: LocationType,
    pub primary_name: String,
    pub alt_names: Vec<String>,
    pub source_ids: Vec<OsmId>,
}

/// Normalized name -> sorted feature URIs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameIndex {
    entries: BTreeMap<String, Vec<String>>,
}

impl NameIndex {
    pub fn build(features: &[GazetteerFeature]) -> Self {
        let mut entries: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for f in features {
            for name in &f.all_names {
                let key = normalize(name);
                if !key.is_empty() {
                    entries.entry(key).or_default().insert(f.uri.clone());
                }
            }
        }
        NameIndex {
            entries: entries.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect(),
        }
    }

    pub fn get(&self, normalized: &str) -> &[String] {
        self.entries.get(normalized).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (name, uris) in &self.entries {
            writeln!(w, "{}\t{}", name, uris.join(","))?;
        }
        Ok(())
    }
}

/// Immutable, concurrently readable gazetteer.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    features: Vec<GazetteerFeature>,
    by_uri: HashMap<String, usize>,
    names: NameIndex,
}

impl PartialEq for Gazetteer {
    fn eq(&self, other: &Self) -> bool {
        self.features == other.features && self.names == other.names
    }
}

impl Gazetteer {
    /// Merge, assign URIs and index.
    pub fn build(raw: &[RawFeature]) -> Self {
        Self::from_features(assign_uris(merge_raw(raw)))
    }

    pub fn from_features(features: Vec<GazetteerFeature>) -> Self {
        let by_uri = features.iter().enumerate().map(|(i, f)| (f.uri.clone(), i)).collect();
        let names = NameIndex::build(&features);
        Gazetteer {
            features,
            by_uri,
            names,
        }
    }

    pub fn features(&self) -> &[GazetteerFeature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn name_index(&self) -> &NameIndex {
        &self.names
    }

    pub fn get(&self, uri: &str) -> Option<&GazetteerFeature> {
        self.by_uri.get(uri).map(|&i| &self.features[i])
    }

    /// Features carrying `name` among their names, after normalization.
    pub fn lookup(&self, name: &str) -> Vec<&GazetteerFeature> {
        self.lookup_normalized(&normalize(name))
    }

    pub fn lookup_normalized(&self, normalized: &str) -> Vec<&GazetteerFeature> {
        self.names.get(normalized).iter().filter_map(|u| self.get(u)).collect()
    }

    pub fn save(&self, dir: &Path) -> Result<(), GazetteerError> {
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join(FEATURES_FILE))?);
        for f in &self.features {
            serde_json::to_writer(&mut w, &f.to_geojson()).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join(NAMES_FILE))?);
        self.names.write_tsv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Loads a saved gazetteer. A missing name index is rebuilt; a present
    /// one must agree with the features.
    pub fn load(dir: &Path) -> Result<Self, GazetteerError> {
        let corrupt = |file: &str, line: usize, detail: String| GazetteerError::CorruptFile {
            file: file.to_string(),
            line,
            detail,
        };
        let reader = BufReader::new(File::open(dir.join(FEATURES_FILE))?);
        let mut features = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: GeoJsonFeature<FeatureProps> =
                serde_json::from_str(&line).map_err(|e| corrupt(FEATURES_FILE, i + 1, e.to_string()))?;
            let f = GazetteerFeature::from_geojson(raw).map_err(|e| corrupt(FEATURES_FILE, i + 1, e))?;
            if !seen.insert(f.uri.clone()) {
                return Err(corrupt(FEATURES_FILE, i + 1, format!("duplicate uri {}", f.uri)));
            }
            features.push(f);
        }
        let gaz = Gazetteer::from_features(features);

        let names_path = dir.join(NAMES_FILE);
        if names_path.exists() {
            let reader = BufReader::new(File::open(&names_path)?);
            let mut entries = BTreeMap::new();
            let mut lines = 0;
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                lines = i + 1;
                if line.is_empty() {
                    continue;
                }
                let (name, uris) = line
                    .split_once('\t')
                    .ok_or_else(|| corrupt(NAMES_FILE, i + 1, "expected name<TAB>uri[,uri...]".into()))?;
                let uris: Vec<String> = uris.split(',').map(str::to_string).collect();
                if gaz.names.get(name) != uris.as_slice() {
                    return Err(corrupt(
                        NAMES_FILE,
                        i + 1,
                        format!("entry for {name:?} disagrees with features"),
                    ));
                }
                entries.insert(name.to_string(), uris);
            }
            if entries.len() != gaz.names.len() {
                return Err(corrupt(
                    NAMES_FILE,
                    lines,
                    format!("index has {} names, features define {}", entries.len(), gaz.names.len()),
                ));
            }
        }
        Ok(gaz)
    }
}
