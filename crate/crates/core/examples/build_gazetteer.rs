//! Merge raw features into a gazetteer with stable URIs and look names up.

use geolinker::gazetteer::Gazetteer;
use geolinker::osm_ingest::{denormalize, parse_osm_file, RuleTable};

pub fn run_example() -> anyhow::Result<()> {
    let osm = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/toy.osm");
    let raw = denormalize(&parse_osm_file(&osm)?, &RuleTable::default());
    let g = Gazetteer::build(&raw);
    println!("{} raw features merged into {} gazetteer entries", raw.len(), g.len());

    for name in ["Utrecht", "kerkstraat", "The Hague", "Nowhere"] {
        let hits: Vec<&str> = g.lookup(name).iter().map(|f| f.uri.as_str()).collect();
        println!("  {name:<11} -> {hits:?}");
    }

    let street = g.get("feat:road/kerkstraat/0").expect("fixture street");
    println!(
        "feat:road/kerkstraat/0 merges {} OSM ways, bbox {:?}",
        street.source_ids.len(),
        street.bbox.to_array()
    );

    let dir = tempfile::tempdir()?;
    g.save(dir.path())?;
    let reloaded = Gazetteer::load(dir.path())?;
    assert_eq!(reloaded.features(), g.features());
    println!("saved and reloaded {} features", reloaded.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
