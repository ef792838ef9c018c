mod common;

use common::{group_by_timeline, linear_query, random_bbox, random_documents, random_query, rng};
use geolinker::docindex::{DocumentIndex, IndexError, IndexedDocument, SearchQuery};
use geolinker::geomodel::BBox;
use proptest::prelude::*;
use rand::Rng;

fn build_validated(docs: &[IndexedDocument]) -> DocumentIndex {
    let mut idx = DocumentIndex::new();
    for d in docs {
        idx.add_document(d.clone()).unwrap();
        idx.tree().validate().unwrap();
    }
    idx
}

fn check(idx: &DocumentIndex, docs: &[IndexedDocument], q: &SearchQuery) {
    let got = idx.query(q).unwrap();
    let (ids, anns, features, total) = linear_query(docs, q);
    let got_ids: Vec<String> = got.documents.iter().map(|h| h.doc_id.clone()).collect();
    assert_eq!(got_ids, ids, "{q:?}");
    let got_anns: Vec<_> = got.documents.iter().map(|h| h.annotations.clone()).collect();
    assert_eq!(got_anns, anns);
    assert_eq!(got.features, features);
    assert_eq!(got.total, total);
    assert_eq!(idx.timeline(q).unwrap(), group_by_timeline(docs, q));
}

#[test]
fn random_queries_match_linear_scan() {
    let mut r = rng(5);
    let docs = random_documents(&mut r, 200, 1000);
    let idx = build_validated(&docs);
    assert_eq!(idx.annotation_count(), 1000);
    for _ in 0..100 {
        check(&idx, &docs, &random_query(&mut r));
    }
}

#[test]
fn removals_keep_tree_valid_and_results_exact() {
    let mut r = rng(6);
    let mut docs = random_documents(&mut r, 120, 600);
    let mut idx = build_validated(&docs);
    for _ in 0..60 {
        let k = r.random_range(0..docs.len());
        let removed = idx.remove_document(&docs[k].doc_id).unwrap();
        idx.tree().validate().unwrap();
        assert_eq!(removed, docs.remove(k));
        if r.random_bool(0.3) {
            let mut again = removed;
            again.doc_id.push_str("-re");
            idx.add_document(again.clone()).unwrap();
            idx.tree().validate().unwrap();
            let pos = docs.partition_point(|d| d.doc_id < again.doc_id);
            docs.insert(pos, again);
        }
        check(&idx, &docs, &random_query(&mut r));
    }
    assert_eq!(
        idx.annotation_count(),
        docs.iter().map(|d| d.annotations.len()).sum::<usize>()
    );
}

#[test]
fn universal_query_returns_every_annotated_document() {
    let mut r = rng(8);
    let docs = random_documents(&mut r, 50, 120);
    let idx = build_validated(&docs);
    let res = idx.query(&SearchQuery::new(BBox::world(), 19)).unwrap();
    assert_eq!(res.total, docs.iter().filter(|d| !d.annotations.is_empty()).count());
}

#[test]
fn duplicate_and_unknown_ids_are_errors() {
    let mut r = rng(9);
    let docs = random_documents(&mut r, 3, 5);
    let mut idx = build_validated(&docs);
    assert!(matches!(
        idx.add_document(docs[0].clone()),
        Err(IndexError::DuplicateDocId(_))
    ));
    assert!(matches!(idx.remove_document("nope"), Err(IndexError::UnknownDocId(_))));
}

#[test]
fn save_and_load_round_trip() {
    let mut r = rng(10);
    let docs = random_documents(&mut r, 40, 150);
    let idx = build_validated(&docs);
    let dir = tempfile::tempdir().unwrap();
    idx.save(dir.path()).unwrap();
    let back = DocumentIndex::load(dir.path()).unwrap();
    back.tree().validate().unwrap();
    for _ in 0..20 {
        let q = random_query(&mut r);
        assert_eq!(back.query(&q).unwrap(), idx.query(&q).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn narrowing_never_adds_documents(seed in any::<u64>()) {
        let mut r = rng(seed);
        let docs = random_documents(&mut r, 30, 90);
        let idx = build_validated(&docs);
        let mut wide = random_query(&mut r);
        wide.max_results = usize::MAX;
        let ids = |q: &SearchQuery| -> std::collections::BTreeSet<String> {
            idx.query(q).unwrap().documents.into_iter().map(|h| h.doc_id).collect()
        };
        let base = ids(&wide);

        let [w, s, e, n] = wide.viewport.to_array();
        let mut smaller = wide.clone();
        smaller.viewport = BBox::new(w, s, w + (e - w) / 2.0, s + (n - s) / 2.0).unwrap();
        prop_assert!(ids(&smaller).is_subset(&base));

        let mut coarser = wide.clone();
        coarser.zoom = wide.zoom.saturating_sub(r.random_range(1..6));
        prop_assert!(ids(&coarser).is_subset(&base));

        let mut later = wide.clone();
        later.from = Some(chrono::NaiveDate::from_ymd_opt(1985, 1, 1).unwrap().max(wide.from.unwrap_or_default()));
        if later.validate().is_ok() {
            prop_assert!(ids(&later).is_subset(&base));
        }
    }

    #[test]
    fn tree_search_is_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut tree = geolinker::docindex::RTree::new();
        let boxes: Vec<BBox> = (0..r.random_range(0..200)).map(|_| random_bbox(&mut r, 4.0)).collect();
        for (i, b) in boxes.iter().enumerate() {
            tree.insert(*b, i);
        }
        prop_assert!(tree.validate().is_ok());
        let q = random_bbox(&mut r, 15.0);
        let mut got: Vec<usize> = tree.search(&q).into_iter().copied().collect();
        got.sort();
        let want: Vec<usize> = (0..boxes.len()).filter(|&i| boxes[i].intersects(&q)).collect();
        prop_assert_eq!(got, want);
    }
}
