//! Run the whole offline pipeline on the toy fixtures and geo-reference a
//! sentence, printing the stage-by-stage trace.
//!
//! ```bash
//! cargo run --example georeference -- "Some text about Utrecht"
//! ```

use std::path::Path;
use std::sync::Arc;

use geolinker::cli::{self, Task};
use geolinker::disambiguator::{GeoRefConfig, GeoReferencer, Models, TypeVariant};
use geolinker::gazetteer::Gazetteer;

pub fn run_example() -> anyhow::Result<()> {
    let fx = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy");
    let work = tempfile::tempdir()?;
    let (gaz, models) = (work.path().join("gazetteer"), work.path().join("models"));
    cli::build_gazetteer(&fx.join("toy.osm"), &gaz, None)?;
    cli::build_freq(&fx.join("reference.txt"), &gaz, &models.join("freq.tsv"))?;
    cli::train(
        Task::Nil,
        &fx.join("nil_train.csv"),
        &models.join("nil.json"),
        42,
        TypeVariant::NaiveBayes,
    )?;
    cli::train(
        Task::Type,
        &fx.join("type_train.csv"),
        &models.join("type.json"),
        42,
        TypeVariant::NaiveBayes,
    )?;
    std::fs::copy(fx.join("kb.tsv"), models.join("kb.tsv"))?;

    let georef = GeoReferencer::new(
        Arc::new(Gazetteer::load(&gaz)?),
        Models::load(&models)?,
        GeoRefConfig::default(),
    )?;
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::fs::read_to_string(fx.join("sentence.txt")).unwrap_or_default());
    let trace = georef.georef(text.trim());
    for m in &trace.mentions {
        println!(
            "{:<12} nil_score {:.3}{} -> {:?} (confidence {:?})",
            m.mention.surface,
            m.nil_score,
            if m.is_nil { " NIL" } else { "" },
            m.chosen,
            m.confidence
        );
    }
    println!("{}", serde_json::to_string(&trace.annotations)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
