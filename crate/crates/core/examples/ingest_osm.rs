//! Parse an OSM XML extract and turn its elements into typed, named
//! features.
//!
//! ```bash
//! cargo run --example ingest_osm [path/to/extract.osm]
//! ```

use std::path::PathBuf;

use geolinker::osm_ingest::{denormalize, parse_osm_file, RuleTable};

pub fn run_example() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/toy.osm"));
    let elements = parse_osm_file(&path)?;
    let features = denormalize(&elements, &RuleTable::default());
    println!("{} elements -> {} features", elements.len(), features.len());
    for f in &features {
        let ids: Vec<String> = f.source_ids.iter().map(|id| id.to_string()).collect();
        println!(
            "  {:<13} {:<16} {:<18} {}",
            f.loc_type.name(),
            f.primary_name,
            f.geometry.kind(),
            ids.join(",")
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
