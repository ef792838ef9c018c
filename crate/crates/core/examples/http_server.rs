//! Serve the HTTP API in-process on an ephemeral port and call it.
//!
//! The `geolinker serve` verb does the same from prepared directories.

use std::path::Path;
use std::sync::Arc;

use geolinker::cli::{self, Task};
use geolinker::disambiguator::{GeoRefConfig, GeoReferencer, Models, TypeVariant};
use geolinker::docindex::{DocumentIndex, SharedIndex};
use geolinker::gazetteer::Gazetteer;
use geolinker::server::{router, AppState, DEFAULT_BODY_LIMIT};

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
    let index: DocumentIndex = cli::index(&annotated, &work.path().join("index"))?;

    let gazetteer = Arc::new(Gazetteer::load(&gaz)?);
    let state = AppState {
        georef: Arc::new(GeoReferencer::new(
            gazetteer.clone(),
            Models::load(&models)?,
            GeoRefConfig::default(),
        )?),
        gazetteer,
        index: Arc::new(SharedIndex::new(index)),
        body_limit: DEFAULT_BODY_LIMIT,
    };

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let base = format!("http://{}", listener.local_addr()?);
        let server = tokio::spawn(async move { axum::serve(listener, router(state, None)).await });
        let client = reqwest::Client::new();

        let georef: serde_json::Value = client
            .post(format!("{base}/georef"))
            .json(&serde_json::json!({"text": "Protest in de Kerkstraat in Utrecht."}))
            .send()
            .await?
            .json()
            .await?;
        println!("POST /georef -> {}", georef["annotations"]);

        let search: serde_json::Value = client
            .get(format!("{base}/search?bbox=4.8,52.3,5.0,52.4&zoom=16"))
            .send()
            .await?
            .json()
            .await?;
        println!("GET /search (Amsterdam) -> total {}", search["total"]);

        let timeline = client
            .get(format!("{base}/timeline?bbox=-180,-90,180,90&facet_key=facet"))
            .send()
            .await?;
        println!(
            "GET /timeline -> {} {}",
            timeline.status(),
            timeline.text().await?.len()
        );

        let feature = client.get(format!("{base}/feature/feat:water/amstel/0")).send().await?;
        println!("GET /feature/feat:water/amstel/0 -> {}", feature.status());
        let missing = client.get(format!("{base}/feature/feat:water/rhine/0")).send().await?;
        println!("GET /feature/feat:water/rhine/0 -> {}", missing.status());

        server.abort();
        anyhow::Ok(())
    })
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
