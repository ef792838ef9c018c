//! Document store with spatial, temporal and facet search.
//!
//! Every annotation bbox goes into an R-tree keyed by (doc_id, ordinal).
//! Queries combine the viewport with a zoom-dependent cap on location-type
//! rank, an optional inclusive date range and an optional facet set.

pub mod rtree;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{RwLock, RwLockReadGuard, RwLockWriteGuard};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomodel::{BBox, LocationType};
use crate::recognizer::Span;

pub use rtree::{RTree, TreeViolation};

pub const DOCUMENTS_FILE: &str = "documents.ndjson";
pub const UNDATED: &str = "undated";
pub const MAX_ZOOM: u8 = 19;

/// `<Feature URI, Span, Confidence, Bounding Box>` for one resolved mention.
/// Serializes as that four-element JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "AnnotationTuple", into = "AnnotationTuple")]
pub struct Annotation {
    pub feature_uri: String,
    pub span: Span,
    pub confidence: f64,
    pub bbox: BBox,
}

type AnnotationTuple = (String, Span, f64, BBox);

impl From<AnnotationTuple> for Annotation {
    fn from((feature_uri, span, confidence, bbox): AnnotationTuple) -> Self {
        Annotation {
            feature_uri,
            span,
            confidence,
            bbox,
        }
    }
}

impl From<Annotation> for AnnotationTuple {
    fn from(a: Annotation) -> Self {
        (a.feature_uri, a.span, a.confidence, a.bbox)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedDocument {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub date: Option<NaiveDate>,
    #[serde(default)]
    pub facet: Option<String>,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("document {0:?} is already indexed")]
    DuplicateDocId(String),
    #[error("no document with id {0:?}")]
    UnknownDocId(String),
    #[error("document {doc_id:?}, annotation {ordinal}: {detail}")]
    InvalidAnnotation {
        doc_id: String,
        ordinal: usize,
        detail: String,
    },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("{file}, line {line}: {detail}")]
    CorruptFile { file: String, line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Highest location-type rank shown at a zoom level. Zoom levels past the
/// table clamp to the finest rank.
pub fn zoom_rank_cap(zoom: u8) -> u8 {
    match zoom {
        0..=4 => 0,
        5..=6 => 1,
        7 => 2,
        8..=9 => 3,
        10..=12 => 4,
        13..=15 => 5,
        _ => 6,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchQuery {
    pub viewport: BBox,
    pub zoom: u8,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    /// Empty means no facet filter.
    pub facets: BTreeSet<String>,
    pub max_results: usize,
}

impl SearchQuery {
    pub fn new(viewport: BBox, zoom: u8) -> Self {
        SearchQuery {
            viewport,
            zoom,
            from: None,
            to: None,
            facets: BTreeSet::new(),
            max_results: usize::MAX,
        }
    }

    pub fn validate(&self) -> Result<(), IndexError> {
        if self.zoom > MAX_ZOOM {
            return Err(IndexError::InvalidQuery(format!(
                "zoom {} outside 0..={MAX_ZOOM}",
                self.zoom
            )));
        }
        if let (Some(f), Some(t)) = (self.from, self.to) {
            if f > t {
                return Err(IndexError::InvalidQuery(format!("from {f} is after to {t}")));
            }
        }
        Ok(())
    }

    fn has_time_range(&self) -> bool {
        self.from.is_some() || self.to.is_some()
    }

    /// Document-level part of the predicate: date range and facet set.
    pub fn accepts_document(&self, doc: &IndexedDocument, check_time: bool) -> bool {
        if check_time && self.has_time_range() {
            let Some(d) = doc.date else { return false };
            if self.from.is_some_and(|f| d < f) || self.to.is_some_and(|t| d > t) {
                return false;
            }
        }
        self.facets.is_empty() || doc.facet.as_ref().is_some_and(|f| self.facets.contains(f))
    }

    /// Annotation-level part of the predicate: viewport and zoom cap.
    pub fn accepts_annotation(&self, a: &Annotation) -> bool {
        let cap = zoom_rank_cap(self.zoom);
        a.bbox.intersects(&self.viewport) && LocationType::from_uri(&a.feature_uri).is_some_and(|t| t.rank() <= cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentHit {
    pub doc_id: String,
    pub date: Option<NaiveDate>,
    pub facet: Option<String>,
    pub score: f64,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub documents: Vec<DocumentHit>,
    /// Distinct URIs of matched annotations over all matching documents.
    pub features: Vec<String>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineBin {
    pub period: String,
    pub facets: BTreeMap<String, usize>,
    pub unfaceted: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default)]
pub struct DocumentIndex {
    docs: BTreeMap<String, IndexedDocument>,
    tree: RTree<(String, usize)>,
}

impl DocumentIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn annotation_count(&self) -> usize {
        self.tree.len()
    }

    pub fn get(&self, doc_id: &str) -> Option<&IndexedDocument> {
        self.docs.get(doc_id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &IndexedDocument> {
        self.docs.values()
    }

    pub fn tree(&self) -> &RTree<(String, usize)> {
        &self.tree
    }

    pub fn add_document(&mut self, doc: IndexedDocument) -> Result<(), IndexError> {
        if self.docs.contains_key(&doc.doc_id) {
            return Err(IndexError::DuplicateDocId(doc.doc_id));
        }
        let text_len = doc.text.chars().count();
        for (i, a) in doc.annotations.iter().enumerate() {
            let bad = |detail: String| IndexError::InvalidAnnotation {
                doc_id: doc.doc_id.clone(),
                ordinal: i,
                detail,
            };
            if a.span.end > text_len {
                return Err(bad(format!("span end {} beyond text length {text_len}", a.span.end)));
            }
            if !(0.0..=1.0).contains(&a.confidence) {
                return Err(bad(format!("confidence {} outside [0, 1]", a.confidence)));
            }
            if LocationType::from_uri(&a.feature_uri).is_none() {
                return Err(bad(format!("unrecognised feature URI {:?}", a.feature_uri)));
            }
        }
        for (i, a) in doc.annotations.iter().enumerate() {
            self.tree.insert(a.bbox, (doc.doc_id.clone(), i));
        }
        self.docs.insert(doc.doc_id.clone(), doc);
        Ok(())
    }

    pub fn remove_document(&mut self, doc_id: &str) -> Result<IndexedDocument, IndexError> {
        let doc = self
            .docs
            .remove(doc_id)
            .ok_or_else(|| IndexError::UnknownDocId(doc_id.to_string()))?;
        for (i, a) in doc.annotations.iter().enumerate() {
            self.tree.remove(&a.bbox, &(doc.doc_id.clone(), i));
        }
        Ok(doc)
    }

    /// Annotation ordinals per document passing the spatial and zoom
    /// predicate, ordinals ascending.
    fn spatial_hits(&self, q: &SearchQuery) -> BTreeMap<&str, Vec<usize>> {
        let mut hits: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (doc_id, i) in self.tree.search(&q.viewport) {
            let doc = &self.docs[doc_id];
            if q.accepts_annotation(&doc.annotations[*i]) {
                hits.entry(doc.doc_id.as_str()).or_default().push(*i);
            }
        }
        hits.values_mut().for_each(|v| v.sort_unstable());
        hits
    }

    pub fn query(&self, q: &SearchQuery) -> Result<QueryResult, IndexError> {
        q.validate()?;
        let mut hits = Vec::new();
        let mut features = BTreeSet::new();
        for (doc_id, ordinals) in self.spatial_hits(q) {
            let doc = &self.docs[doc_id];
            if !q.accepts_document(doc, true) {
                continue;
            }
            let annotations: Vec<Annotation> = ordinals.iter().map(|&i| doc.annotations[i].clone()).collect();
            features.extend(annotations.iter().map(|a| a.feature_uri.clone()));
            let score = annotations
                .iter()
                .map(|a| a.confidence)
                .fold(f64::NEG_INFINITY, f64::max);
            hits.push(DocumentHit {
                doc_id: doc.doc_id.clone(),
                date: doc.date,
                facet: doc.facet.clone(),
                score,
                annotations,
            });
        }
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        let total = hits.len();
        hits.truncate(q.max_results);
        Ok(QueryResult {
            documents: hits,
            features: features.into_iter().collect(),
            total,
        })
    }

    /// Yearly annotation counts over the corpus date span, ignoring the
    /// query's time range. Documents without a date go to an `undated` bin,
    /// present whenever the corpus has undated documents.
    pub fn timeline(&self, q: &SearchQuery) -> Result<Vec<TimelineBin>, IndexError> {
        q.validate()?;
        let years: Vec<i32> = self.docs.values().filter_map(|d| d.date.map(|d| d.year())).collect();
        let has_undated = self.docs.values().any(|d| d.date.is_none());
        let mut bins: BTreeMap<Option<i32>, TimelineBin> = BTreeMap::new();
        let empty = |period: String| TimelineBin {
            period,
            facets: BTreeMap::new(),
            unfaceted: 0,
            total: 0,
        };
        if let (Some(lo), Some(hi)) = (years.iter().min(), years.iter().max()) {
            for y in *lo..=*hi {
                bins.insert(Some(y), empty(y.to_string()));
            }
        }
        if has_undated {
            bins.insert(None, empty(UNDATED.to_string()));
        }
        for (doc_id, ordinals) in self.spatial_hits(q) {
            let doc = &self.docs[doc_id];
            if !q.accepts_document(doc, false) {
                continue;
            }
            let bin = bins
                .get_mut(&doc.date.map(|d| d.year()))
                .expect("bin created for every year in span");
            let n = ordinals.len();
            match &doc.facet {
                Some(f) => *bin.facets.entry(f.clone()).or_default() += n,
                None => bin.unfaceted += n,
            }
            bin.total += n;
        }
        // BTreeMap orders None first; the undated bin goes last.
        let mut out: Vec<TimelineBin> = Vec::with_capacity(bins.len());
        let undated = bins.remove(&None);
        out.extend(bins.into_values());
        out.extend(undated);
        Ok(out)
    }

    pub fn save(&self, dir: &Path) -> Result<(), IndexError> {
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join(DOCUMENTS_FILE))?);
        for doc in self.docs.values() {
            serde_json::to_writer(&mut w, doc).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, IndexError> {
        let reader = BufReader::new(File::open(dir.join(DOCUMENTS_FILE))?);
        let mut index = DocumentIndex::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: IndexedDocument = serde_json::from_str(&line).map_err(|e| IndexError::CorruptFile {
                file: DOCUMENTS_FILE.to_string(),
                line: i + 1,
                detail: e.to_string(),
            })?;
            index.add_document(doc)?;
        }
        Ok(index)
    }
}

/// A [`DocumentIndex`] shared between many readers and one writer.
#[derive(Debug, Default)]
pub struct SharedIndex(RwLock<DocumentIndex>);

impl SharedIndex {
    pub fn new(index: DocumentIndex) -> Self {
        SharedIndex(RwLock::new(index))
    }

    pub fn read(&self) -> RwLockReadGuard<'_, DocumentIndex> {
        self.0.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, DocumentIndex> {
        self.0.write().unwrap_or_else(|e| e.into_inner())
    }
}
