//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use geolinker::disambiguator::typeclass::{MaxEntObjective, WindowExample};
use geolinker::disambiguator::{CandidateGraph, NilFeatureVector, NilLabel, Window};
use geolinker::docindex::{Annotation, IndexedDocument, SearchQuery, TimelineBin};
use geolinker::gazetteer::{Gazetteer, MergedFeature};
use geolinker::geomodel::{BBox, Geometry, LocationType};
use geolinker::osm_ingest::{OsmId, OsmKind, RawFeature};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unicode_normalization::char::{decompose_canonical, is_combining_mark};
use unicode_segmentation::UnicodeSegmentation;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- recognizer

/// Case folding without the crate's offset machinery: NFD, drop marks,
/// lowercase, collapse whitespace runs, trim.
pub fn fold(s: &str) -> String {
    let mut out = String::new();
    let mut space = false;
    for c in s.chars() {
        let mut parts = Vec::new();
        decompose_canonical(c, |d| parts.push(d));
        for d in parts {
            if is_combining_mark(d) {
                continue;
            }
            for l in d.to_lowercase() {
                if l.is_whitespace() {
                    space = true;
                } else {
                    if space && !out.is_empty() {
                        out.push(' ');
                    }
                    space = false;
                    out.push(l);
                }
            }
        }
    }
    out
}

/// Codepoint offsets where a UAX#29 word boundary falls.
pub fn boundaries(text: &str) -> BTreeSet<usize> {
    let mut set = BTreeSet::from([0]);
    let mut cp = 0;
    for w in text.split_word_bounds() {
        cp += w.chars().count();
        set.insert(cp);
    }
    set
}

/// Tries every boundary-aligned substring against the folded lexicon, then
/// keeps leftmost-longest non-overlapping hits.
pub fn naive_detect(text: &str, lexicon: &[String]) -> Vec<(usize, usize, String)> {
    let names: BTreeSet<String> = lexicon.iter().map(|n| fold(n)).filter(|n| !n.is_empty()).collect();
    let chars: Vec<char> = text.chars().collect();
    let bounds: Vec<usize> = boundaries(text).into_iter().collect();
    let mut out = Vec::new();
    let mut pos = 0;
    for (i, &s) in bounds.iter().enumerate() {
        if s < pos || s >= chars.len() || chars[s].is_whitespace() {
            continue;
        }
        let mut best = None;
        for &e in &bounds[i + 1..] {
            if chars[e - 1].is_whitespace() {
                continue;
            }
            let sub: String = chars[s..e].iter().collect();
            let f = fold(&sub);
            if names.contains(&f) {
                best = Some((s, e, f));
            }
        }
        if let Some(hit) = best {
            pos = hit.1;
            out.push(hit);
        }
    }
    out
}

pub fn point_feature(id: i64, ty: LocationType, name: &str, lon: f64, lat: f64) -> RawFeature {
    RawFeature {
        source_ids: vec![OsmId::new(OsmKind::Node, id)],
        geometry: Geometry::point(lon, lat).unwrap(),
        loc_type: ty,
        primary_name: name.to_string(),
        alt_names: vec![],
        tags: Default::default(),
    }
}

/// One road point per name, spaced apart so nothing merges.
pub fn lexicon_gazetteer(names: &[String]) -> Gazetteer {
    let raw: Vec<RawFeature> = names
        .iter()
        .enumerate()
        .map(|(i, n)| point_feature(i as i64 + 1, LocationType::Road, n, (i % 300) as f64 * 0.5 - 75.0, 10.0))
        .collect();
    Gazetteer::build(&raw)
}

const TEXT_ALPHABET: &[&str] = &["a", "b", "é", "A", "B", " ", " ", "  ", ".", "-", "'", "1", "ß", "\n"];
const NAME_ALPHABET: &[&str] = &["a", "b", "é", "B", "ab", "ba"];

pub fn random_lexicon(r: &mut ChaCha8Rng) -> Vec<String> {
    let n = r.random_range(1..6);
    (0..n)
        .map(|_| {
            let words = r.random_range(1..3);
            (0..words)
                .map(|_| {
                    let len = r.random_range(1..3);
                    (0..len)
                        .map(|_| NAME_ALPHABET[r.random_range(0..NAME_ALPHABET.len())])
                        .collect::<String>()
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

pub fn random_text(r: &mut ChaCha8Rng) -> String {
    let n = r.random_range(0..40);
    (0..n)
        .map(|_| TEXT_ALPHABET[r.random_range(0..TEXT_ALPHABET.len())])
        .collect()
}

// ---------------------------------------------------------------- gazetteer

/// 50 features over three names and two types. Geometries overlap in
/// chains so that merging is transitive and spans mixed dimensions.
pub fn merge_fixture() -> Vec<RawFeature> {
    let mut r = rng(7);
    let names = ["Kerkstraat", "Dorpsstraat", "Molenweg"];
    let mut out = Vec::new();
    for i in 0..50 {
        let ty = if i % 5 == 4 {
            LocationType::Building
        } else {
            LocationType::Road
        };
        let name = names[r.random_range(0..names.len())];
        let x = r.random_range(0..12) as f64 * 0.01;
        let y = r.random_range(0..3) as f64 * 0.01;
        let geometry = match i % 3 {
            0 => Geometry::point(x, y).unwrap(),
            1 => Geometry::line_string(&[(x, y), (x + 0.015, y + 0.005)]).unwrap(),
            _ => Geometry::polygon(&[(x, y), (x + 0.012, y), (x + 0.012, y + 0.012), (x, y + 0.012), (x, y)]).unwrap(),
        };
        let alt_names = if i % 7 == 0 {
            vec![format!("{} Oost", name)]
        } else {
            vec![]
        };
        let kind = [OsmKind::Node, OsmKind::Way, OsmKind::Relation][i % 3];
        out.push(RawFeature {
            source_ids: vec![OsmId::new(kind, 1000 + i as i64)],
            geometry,
            loc_type: ty,
            primary_name: name.to_string(),
            alt_names,
            tags: Default::default(),
        });
    }
    out
}

/// The merge relation on two merged features.
pub fn merge_relation(a: &MergedFeature, b: &MergedFeature) -> bool {
    let na: BTreeSet<String> = a.all_names.iter().map(|n| fold(n)).collect();
    a.loc_type == b.loc_type && b.all_names.iter().any(|n| na.contains(&fold(n))) && a.geometry.intersects(&b.geometry)
}

// ---------------------------------------------------------------- docindex

pub fn zoom_cap_table(zoom: u8) -> u8 {
    [0, 0, 0, 0, 0, 1, 1, 2, 3, 3, 4, 4, 4, 5, 5, 5, 6, 6, 6, 6][zoom as usize]
}

fn uri_rank(uri: &str) -> Option<u8> {
    let ty = uri.strip_prefix("feat:")?.split('/').next()?;
    LocationType::ALL.iter().position(|t| t.slug() == ty).map(|p| p as u8)
}

fn boxes_touch(a: &BBox, b: &BBox) -> bool {
    let (a, b) = (a.to_array(), b.to_array());
    a[0] <= b[2] && b[0] <= a[2] && a[1] <= b[3] && b[1] <= a[3]
}

fn oracle_matches(q: &SearchQuery, doc: &IndexedDocument) -> Vec<usize> {
    doc.annotations
        .iter()
        .enumerate()
        .filter(|(_, a)| {
            boxes_touch(&a.bbox, &q.viewport) && uri_rank(&a.feature_uri).is_some_and(|r| r <= zoom_cap_table(q.zoom))
        })
        .map(|(i, _)| i)
        .collect()
}

fn oracle_facet_ok(q: &SearchQuery, doc: &IndexedDocument) -> bool {
    q.facets.is_empty() || doc.facet.as_ref().is_some_and(|f| q.facets.contains(f))
}

/// (doc ids in result order, per-doc matched annotations, feature URIs, total).
pub type OracleResult = (Vec<String>, Vec<Vec<Annotation>>, Vec<String>, usize);

pub fn linear_query(docs: &[IndexedDocument], q: &SearchQuery) -> OracleResult {
    let mut hits: Vec<(f64, String, Vec<Annotation>)> = Vec::new();
    let mut features = BTreeSet::new();
    for doc in docs {
        let m = oracle_matches(q, doc);
        if m.is_empty() || !oracle_facet_ok(q, doc) {
            continue;
        }
        if q.from.is_some() || q.to.is_some() {
            match doc.date {
                None => continue,
                Some(d) if q.from.is_some_and(|f| d < f) || q.to.is_some_and(|t| d > t) => continue,
                _ => {}
            }
        }
        let anns: Vec<Annotation> = m.iter().map(|&i| doc.annotations[i].clone()).collect();
        let score = anns.iter().map(|a| a.confidence).fold(f64::MIN, f64::max);
        features.extend(anns.iter().map(|a| a.feature_uri.clone()));
        hits.push((score, doc.doc_id.clone(), anns));
    }
    hits.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let total = hits.len();
    hits.truncate(q.max_results);
    let ids = hits.iter().map(|h| h.1.clone()).collect();
    let anns = hits.into_iter().map(|h| h.2).collect();
    (ids, anns, features.into_iter().collect(), total)
}

pub fn group_by_timeline(docs: &[IndexedDocument], q: &SearchQuery) -> Vec<TimelineBin> {
    use chrono::Datelike;
    let years: Vec<i32> = docs.iter().filter_map(|d| d.date.map(|d| d.year())).collect();
    let mut bins = Vec::new();
    let make = |period: String, pick: &dyn Fn(&IndexedDocument) -> bool| {
        let mut facets: BTreeMap<String, usize> = BTreeMap::new();
        let mut unfaceted = 0;
        for d in docs.iter().filter(|d| pick(d) && oracle_facet_ok(q, d)) {
            let n = oracle_matches(q, d).len();
            if n == 0 {
                continue;
            }
            match &d.facet {
                Some(f) => *facets.entry(f.clone()).or_default() += n,
                None => unfaceted += n,
            }
        }
        let total = facets.values().sum::<usize>() + unfaceted;
        TimelineBin {
            period,
            facets,
            unfaceted,
            total,
        }
    };
    if let (Some(lo), Some(hi)) = (years.iter().min(), years.iter().max()) {
        for y in *lo..=*hi {
            bins.push(make(y.to_string(), &|d| d.date.is_some_and(|x| x.year() == y)));
        }
    }
    if docs.iter().any(|d| d.date.is_none()) {
        bins.push(make("undated".into(), &|d| d.date.is_none()));
    }
    bins
}

pub fn random_bbox(r: &mut ChaCha8Rng, max_side: f64) -> BBox {
    let w = r.random_range(-20.0..20.0);
    let s = r.random_range(-20.0..20.0);
    let dw = if r.random_bool(0.2) {
        0.0
    } else {
        r.random_range(0.0..max_side)
    };
    let dh = if r.random_bool(0.2) {
        0.0
    } else {
        r.random_range(0.0..max_side)
    };
    BBox::new(w, s, w + dw, s + dh).unwrap()
}

pub fn random_documents(r: &mut ChaCha8Rng, n_docs: usize, n_annotations: usize) -> Vec<IndexedDocument> {
    let facets = ["A", "B", "C"];
    let mut docs: Vec<IndexedDocument> = (0..n_docs)
        .map(|i| IndexedDocument {
            doc_id: format!("d{i:04}"),
            text: "x".repeat(50),
            date: r.random_bool(0.85).then(|| {
                chrono::NaiveDate::from_ymd_opt(r.random_range(1975..1995), r.random_range(1..13), 1).unwrap()
            }),
            facet: r.random_bool(0.8).then(|| facets[r.random_range(0..3)].to_string()),
            annotations: vec![],
        })
        .collect();
    for k in 0..n_annotations {
        let d = r.random_range(0..n_docs);
        let ty = LocationType::ALL[r.random_range(0..7)];
        let start = r.random_range(0..45);
        docs[d].annotations.push(Annotation {
            feature_uri: format!("feat:{}/f{}/0", ty.slug(), k % 97),
            span: geolinker::recognizer::Span::new(start, start + 5),
            confidence: (r.random_range(0..=10) as f64) / 10.0,
            bbox: random_bbox(r, 3.0),
        });
    }
    docs
}

pub fn random_query(r: &mut ChaCha8Rng) -> SearchQuery {
    let mut q = SearchQuery::new(random_bbox(r, 25.0), r.random_range(0..=19));
    if r.random_bool(0.3) {
        q.from = Some(chrono::NaiveDate::from_ymd_opt(r.random_range(1974..1990), 1, 1).unwrap());
    }
    if r.random_bool(0.3) {
        q.to = Some(chrono::NaiveDate::from_ymd_opt(r.random_range(1990..1996), 6, 30).unwrap());
    }
    for f in ["A", "B", "C"] {
        if r.random_bool(0.2) {
            q.facets.insert(f.to_string());
        }
    }
    q.max_results = if r.random_bool(0.5) {
        usize::MAX
    } else {
        r.random_range(0..30)
    };
    q
}

// ---------------------------------------------------------------- random walk

/// Solves (I - (1 - alpha) P^T) p = alpha r directly.
pub fn direct_walk(graph: &CandidateGraph, alpha: f64) -> Vec<f64> {
    let n = graph.len();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let s: f64 = graph.weights[i].iter().sum();
        for j in 0..n {
            p[(i, j)] = if s > 0.0 {
                graph.weights[i][j] / s
            } else {
                graph.restart[j]
            };
        }
    }
    let a = DMatrix::<f64>::identity(n, n) - p.transpose() * (1.0 - alpha);
    let b = DVector::from_iterator(n, graph.restart.iter().map(|r| alpha * r));
    let x = a.lu().solve(&b).expect("restart walk system is non-singular");
    x.iter().copied().collect()
}

/// 50 symmetric graphs of 1..=6 nodes: dense, sparse, stars, paths, two
/// cliques and graphs with isolated nodes.
pub fn walk_suite() -> Vec<CandidateGraph> {
    let mut r = rng(11);
    (0..50)
        .map(|case| {
            let n = 1 + case % 6;
            let mut w = vec![vec![0.0; n]; n];
            let mut set = |i: usize, j: usize, x: f64| {
                w[i][j] = x;
                w[j][i] = x;
            };
            for i in 0..n {
                for j in (i + 1)..n {
                    let x = match case / 6 % 5 {
                        0 => r.random_range(0.01..1.0),
                        1 => {
                            if r.random_bool(0.4) {
                                r.random_range(0.0..5.0)
                            } else {
                                0.0
                            }
                        }
                        2 => {
                            if i == 0 {
                                r.random_range(0.1..1.0)
                            } else {
                                0.0
                            }
                        }
                        3 => {
                            if j == i + 1 {
                                (-(r.random_range(0.0..200.0) / 50.0f64)).exp()
                            } else {
                                0.0
                            }
                        }
                        _ => {
                            if (i < n / 2) == (j < n / 2) && j != n - 1 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    };
                    set(i, j, x);
                }
            }
            CandidateGraph::from_weights((0..n).map(|i| (i, format!("n{i}"))).collect(), w)
        })
        .collect()
}

// ---------------------------------------------------------------- classifiers

/// Central finite-difference gradient.
pub fn numeric_gradient(obj: &MaxEntObjective, params: &[f64], h: f64) -> Vec<f64> {
    (0..params.len())
        .map(|j| {
            let mut up = params.to_vec();
            let mut dn = params.to_vec();
            up[j] += h;
            dn[j] -= h;
            (obj.loss(&up) - obj.loss(&dn)) / (2.0 * h)
        })
        .collect()
}

pub fn window(before: &[&str], after: &[&str]) -> Window {
    Window {
        before: before.iter().map(|s| s.to_string()).collect(),
        after: after.iter().map(|s| s.to_string()).collect(),
    }
}

/// Four labelled windows over a six-token vocabulary.
pub fn nb_fixture() -> Vec<WindowExample> {
    vec![
        WindowExample {
            label: LocationType::Road,
            window: window(&["in", "the"], &["street"]),
        },
        WindowExample {
            label: LocationType::Road,
            window: window(&["the"], &["traffic"]),
        },
        WindowExample {
            label: LocationType::Water,
            window: window(&["the"], &["river"]),
        },
        WindowExample {
            label: LocationType::Water,
            window: window(&["on"], &["river"]),
        },
    ]
}

/// Posterior for the window `[the] [river]` under the fixture, worked out by
/// hand. Vocabulary V = 6 (in, on, river, street, the, traffic). Road holds
/// 5 tokens (the x2), Water 4 tokens (river x2), the other five classes none.
/// Priors are (n_c + 1) / (4 + 7).
pub fn nb_fixture_posterior() -> [f64; 7] {
    let road = 3.0 / 11.0 * (3.0 / 11.0) * (1.0 / 11.0);
    let water = 3.0 / 11.0 * (2.0 / 10.0) * (3.0 / 10.0);
    let other = 1.0 / 11.0 * (1.0 / 6.0) * (1.0 / 6.0);
    let z = road + water + 5.0 * other;
    let mut p = [other / z; 7];
    p[LocationType::Road.rank() as usize] = road / z;
    p[LocationType::Water.rank() as usize] = water / z;
    p
}

/// 20 points in the unit cube labelled by a fixed hyperplane, keeping only
/// points at distance >= 0.15 from it.
pub fn separable_nil_set() -> Vec<(NilFeatureVector, NilLabel)> {
    let w = [1.0, -1.0, 0.5, 0.0, -0.5, 1.0, 0.0, 0.5];
    let b = -0.5;
    let norm = w.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
    let mut r = rng(3);
    let mut out = Vec::new();
    let (mut pos, mut neg) = (0, 0);
    while out.len() < 20 {
        let x: [f64; 8] = std::array::from_fn(|_| r.random_range(0.0..1.0));
        let m = (w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + b) / norm;
        if m.abs() < 0.15 {
            continue;
        }
        let label = if m > 0.0 { NilLabel::Place } else { NilLabel::Nil };
        if (label == NilLabel::Place && pos >= 10) || (label == NilLabel::Nil && neg >= 10) {
            continue;
        }
        if label == NilLabel::Place {
            pos += 1;
        } else {
            neg += 1;
        }
        out.push((NilFeatureVector(x), label));
    }
    out
}

/// Margin perceptron on (x, 1): returns true once every point has
/// functional margin >= 1 within the epoch budget.
pub fn perceptron_separates(data: &[(NilFeatureVector, NilLabel)]) -> bool {
    let mut w = [0.0f64; 9];
    for _ in 0..100_000 {
        let mut clean = true;
        for (x, y) in data {
            let y = if *y == NilLabel::Place { 1.0 } else { -1.0 };
            let m: f64 = x.0.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[8];
            if y * m < 1.0 {
                clean = false;
                w.iter_mut().zip(&x.0).for_each(|(wj, xj)| *wj += y * xj);
                w[8] += y;
            }
        }
        if clean {
            return true;
        }
    }
    false
}

// ---------------------------------------------------------------- pipeline

/// Runs the offline pipeline from the toy fixtures into `root` and returns
/// the (gazetteer, models, index) directories.
pub fn run_offline_pipeline(root: &Path) -> (PathBuf, PathBuf, PathBuf) {
    use geolinker::cli;
    use geolinker::disambiguator::TypeVariant;
    let f = fixture_dir();
    let (gaz, models, idx) = (root.join("gazetteer"), root.join("models"), root.join("index"));
    cli::build_gazetteer(&f.join("toy.osm"), &gaz, None).unwrap();
    cli::build_freq(&f.join("reference.txt"), &gaz, &models.join("freq.tsv")).unwrap();
    cli::train(
        cli::Task::Nil,
        &f.join("nil_train.csv"),
        &models.join("nil.json"),
        42,
        TypeVariant::NaiveBayes,
    )
    .unwrap();
    cli::train(
        cli::Task::Type,
        &f.join("type_train.csv"),
        &models.join("type.json"),
        42,
        TypeVariant::NaiveBayes,
    )
    .unwrap();
    std::fs::copy(f.join("kb.tsv"), models.join("kb.tsv")).unwrap();
    cli::annotate(&gaz, &models, &f.join("corpus.jsonl"), &root.join("annotated.jsonl")).unwrap();
    cli::index(&root.join("annotated.jsonl"), &idx).unwrap();
    (gaz, models, idx)
}

pub fn fixture_sentence() -> String {
    std::fs::read_to_string(fixture_dir().join("sentence.txt"))
        .unwrap()
        .trim_end()
        .to_string()
}
