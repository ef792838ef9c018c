mod common;

use std::collections::BTreeSet;

use common::{merge_fixture, merge_relation, point_feature, rng};
use geolinker::gazetteer::{merge_features, merge_raw, MergedFeature};
use geolinker::geomodel::{Geometry, LocationType};
use geolinker::osm_ingest::{OsmId, RawFeature};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn sources(fs: &[MergedFeature]) -> Vec<OsmId> {
    let mut all: Vec<OsmId> = fs.iter().flat_map(|f| f.source_ids.iter().copied()).collect();
    all.sort();
    all
}

fn check_closed(out: &[MergedFeature]) -> Result<(), String> {
    for (i, a) in out.iter().enumerate() {
        for b in &out[i + 1..] {
            if merge_relation(a, b) {
                return Err(format!(
                    "{} and {} still satisfy the merge relation",
                    a.primary_name, b.primary_name
                ));
            }
        }
    }
    Ok(())
}

#[test]
fn fixture_merges_into_fewer_features() {
    let out = merge_raw(&merge_fixture());
    assert!(out.len() < 50 && out.len() > 3, "got {} features", out.len());
    assert!(out.iter().any(|f| f.source_ids.len() >= 3));
    check_closed(&out).unwrap();
}

#[test]
fn order_independent_over_permutations() {
    let raw = merge_fixture();
    let reference = merge_raw(&raw);
    let mut r = rng(99);
    for _ in 0..120 {
        let mut shuffled = raw.clone();
        shuffled.shuffle(&mut r);
        assert_eq!(merge_raw(&shuffled), reference);
    }
}

#[test]
fn idempotent() {
    let once = merge_raw(&merge_fixture());
    assert_eq!(merge_features(once.clone()), once);
}

#[test]
fn source_ids_conserved_and_disjoint() {
    let raw = merge_fixture();
    let out = merge_raw(&raw);
    let mut input: Vec<OsmId> = raw.iter().flat_map(|f| f.source_ids.iter().copied()).collect();
    input.sort();
    assert_eq!(sources(&out), input);
    let distinct: BTreeSet<OsmId> = input.iter().copied().collect();
    assert_eq!(distinct.len(), input.len());
}

#[test]
fn transitive_chain_merges_through_new_names() {
    // A and B share "x" and touch; B also carries "y", which C has, and
    // C touches B. All three end up together.
    let mut a = point_feature(1, LocationType::Road, "x", 0.0, 0.0);
    a.geometry = Geometry::line_string(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
    let mut b = point_feature(2, LocationType::Road, "x", 1.0, 0.0);
    b.alt_names = vec!["y".into()];
    b.geometry = Geometry::line_string(&[(1.0, 0.0), (2.0, 0.0)]).unwrap();
    let mut c = point_feature(3, LocationType::Road, "y", 2.0, 0.0);
    c.geometry = Geometry::line_string(&[(2.0, 0.0), (3.0, 0.0)]).unwrap();
    let out = merge_raw(&[c, a, b]);
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].primary_name, "x");
    assert_eq!(out[0].source_ids.len(), 3);
}

#[test]
fn different_types_never_merge() {
    let a = point_feature(1, LocationType::Municipality, "Utrecht", 5.0, 52.0);
    let b = point_feature(2, LocationType::Province, "Utrecht", 5.0, 52.0);
    assert_eq!(merge_raw(&[a, b]).len(), 2);
}

fn arb_features() -> impl Strategy<Value = Vec<RawFeature>> {
    prop::collection::vec((0..3usize, 0..2usize, 0..6i32, 0..3i32, any::<bool>()), 1..14).prop_map(|specs| {
        specs
            .into_iter()
            .enumerate()
            .map(|(i, (name, ty, x, y, line))| {
                let ty = [LocationType::Road, LocationType::Water][ty];
                let mut f = point_feature(i as i64 + 1, ty, ["a", "b", "A"][name], x as f64, y as f64);
                if line {
                    f.geometry = Geometry::line_string(&[(x as f64, y as f64), (x as f64 + 1.0, y as f64)]).unwrap();
                }
                f
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn merge_properties_hold(raw in arb_features(), seed in any::<u64>()) {
        let out = merge_raw(&raw);
        let mut shuffled = raw.clone();
        shuffled.shuffle(&mut rng(seed));
        prop_assert_eq!(&merge_raw(&shuffled), &out);
        prop_assert_eq!(&merge_features(out.clone()), &out);
        prop_assert_eq!(sources(&out).len(), raw.len());
        prop_assert!(check_closed(&out).is_ok());
    }
}
