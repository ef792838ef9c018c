//! Annotate the toy corpus, index it, then search by viewport, zoom, time
//! range and facet and build a timeline.

use std::path::Path;

use chrono::NaiveDate;
use geolinker::cli::{self, Task};
use geolinker::disambiguator::TypeVariant;
use geolinker::docindex::SearchQuery;
use geolinker::geomodel::BBox;

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
    let annotated = work.path().join("annotated.jsonl");
    cli::annotate(&gaz, &models, &fx.join("corpus.jsonl"), &annotated)?;
    let index = cli::index(&annotated, &work.path().join("index"))?;
    println!(
        "{} documents, {} annotations indexed",
        index.len(),
        index.annotation_count()
    );

    let utrecht: BBox = "5.0,52.0,5.2,52.2".parse()?;
    for zoom in [6, 9, 16] {
        let res = index.query(&SearchQuery::new(utrecht, zoom))?;
        println!(
            "Utrecht viewport, zoom {zoom:>2}: {} documents, features {:?}",
            res.total, res.features
        );
    }

    let mut q = SearchQuery::new(BBox::world(), 19);
    q.from = NaiveDate::from_ymd_opt(1985, 1, 1);
    q.facets.insert("CDA".into());
    q.max_results = 3;
    let res = index.query(&q)?;
    println!("CDA since 1985: {} documents, top {}:", res.total, res.documents.len());
    for hit in &res.documents {
        println!("  {} {:?} score {:.3}", hit.doc_id, hit.date, hit.score);
    }

    println!("timeline (annotations per year and facet):");
    for bin in index.timeline(&SearchQuery::new(BBox::world(), 19))? {
        println!(
            "  {:<8} {:>2} {:?} unfaceted {}",
            bin.period, bin.total, bin.facets, bin.unfaceted
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
