//! Command-line verbs driving the offline pipeline and the server.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use tracing::info;

use crate::disambiguator::nil::{read_nil_csv, training_accuracy};
use crate::disambiguator::typeclass::read_type_csv;
use crate::disambiguator::{
    build_freq_table, train_nil, train_type, GeoRefConfig, GeoReferencer, Models, NilTrainConfig, TypeTrainConfig,
    TypeVariant,
};
use crate::docindex::{DocumentIndex, IndexedDocument, SharedIndex};
use crate::gazetteer::Gazetteer;
use crate::osm_ingest::{denormalize, parse_osm_file, RuleTable};
use crate::recognizer::Automaton;
use crate::server::{router, AppState, DEFAULT_BODY_LIMIT};

#[derive(Debug, Parser)]
#[command(
    name = "geolinker",
    version,
    about = "Geo-reference text against an OpenStreetMap gazetteer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Nil,
    Type,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an OSM XML extract and write a merged gazetteer directory.
    BuildGazetteer {
        #[arg(long)]
        osm: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replacement location-type rule table (TOML).
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Count gazetteer names in a plain-text reference corpus.
    BuildFreq {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        gazetteer: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the NIL or location-type classifier from CSV.
    Train {
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = crate::disambiguator::nil::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = TypeVariant::NaiveBayes)]
        variant: TypeVariant,
    },
    /// Geo-reference every document of a JSON-lines file.
    Annotate {
        #[arg(long)]
        gazetteer: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a document index directory from annotated JSON lines.
    Index {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        gazetteer: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long, env = "GEOLINKER_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Directory of static web UI assets.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

/// One line of a corpus file before annotation.
#[derive(Debug, Deserialize)]
struct InputDocument {
    doc_id: String,
    text: String,
    #[serde(default)]
    date: Option<NaiveDate>,
    #[serde(default)]
    facet: Option<String>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn load_gazetteer(dir: &Path) -> Result<Gazetteer> {
    if !dir.is_dir() {
        bail!("gazetteer directory {} does not exist", dir.display());
    }
    Gazetteer::load(dir).with_context(|| format!("loading gazetteer from {}", dir.display()))
}

pub fn build_gazetteer(osm: &Path, out: &Path, rules: Option<&Path>) -> Result<Gazetteer> {
    let rules = match rules {
        Some(p) => RuleTable::load(p)?,
        None => RuleTable::default(),
    };
    let elements = parse_osm_file(osm).with_context(|| format!("parsing {}", osm.display()))?;
    let raw = denormalize(&elements, &rules);
    let g = Gazetteer::build(&raw);
    g.save(out)?;
    info!(
        elements = elements.len(),
        raw = raw.len(),
        features = g.len(),
        "gazetteer written"
    );
    Ok(g)
}

pub fn build_freq(corpus: &Path, gazetteer: &Path, out: &Path) -> Result<()> {
    let g = load_gazetteer(gazetteer)?;
    let automaton = Automaton::build(g.name_index().names())?;
    let table = build_freq_table(open(corpus)?, &automaton)?;
    let mut w = create(out)?;
    table.write_tsv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn train(task: Task, data: &Path, out: &Path, seed: u64, variant: TypeVariant) -> Result<()> {
    let json = match task {
        Task::Nil => {
            let examples = read_nil_csv(open(data)?)?;
            let config = NilTrainConfig {
                seed,
                ..Default::default()
            };
            let report = train_nil(&examples, &config)?;
            info!(
                accuracy = training_accuracy(&report.model, &examples),
                "NIL model trained"
            );
            serde_json::to_string_pretty(&report.model)?
        }
        Task::Type => {
            let examples = read_type_csv(open(data)?)?;
            let model = train_type(&examples, variant, &TypeTrainConfig::default())?;
            serde_json::to_string_pretty(&model)?
        }
    };
    let mut w = create(out)?;
    w.write_all(json.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_georeferencer(gazetteer: &Path, models: &Path) -> Result<GeoReferencer> {
    let g = Arc::new(load_gazetteer(gazetteer)?);
    let m = Models::load(models).with_context(|| format!("loading models from {}", models.display()))?;
    Ok(GeoReferencer::new(g, m, GeoRefConfig::default())?)
}

pub fn annotate(gazetteer: &Path, models: &Path, input: &Path, out: &Path) -> Result<usize> {
    let georef = load_georeferencer(gazetteer, models)?;
    let mut w = create(out)?;
    let mut n = 0;
    for (i, line) in open(input)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: InputDocument =
            serde_json::from_str(&line).with_context(|| format!("{}, line {}", input.display(), i + 1))?;
        let annotations = georef.georef(&doc.text).annotations;
        let indexed = IndexedDocument {
            doc_id: doc.doc_id,
            text: doc.text,
            date: doc.date,
            facet: doc.facet,
            annotations,
        };
        serde_json::to_writer(&mut w, &indexed)?;
        w.write_all(b"\n")?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

pub fn index(input: &Path, out: &Path) -> Result<DocumentIndex> {
    let mut idx = DocumentIndex::new();
    for (i, line) in open(input)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: IndexedDocument =
            serde_json::from_str(&line).with_context(|| format!("{}, line {}", input.display(), i + 1))?;
        idx.add_document(doc)?;
    }
    idx.save(out)?;
    Ok(idx)
}

/// Loads all state and serves until interrupted. The bound address is
/// printed to stdout as `listening on http://<addr>`.
pub async fn serve(
    gazetteer: &Path,
    index: &Path,
    models: &Path,
    addr: SocketAddr,
    static_dir: Option<PathBuf>,
) -> Result<()> {
    let georef = load_georeferencer(gazetteer, models)?;
    let idx = DocumentIndex::load(index).with_context(|| format!("loading index from {}", index.display()))?;
    let state = AppState {
        gazetteer: Arc::new(georef.gazetteer().clone()),
        georef: Arc::new(georef),
        index: Arc::new(SharedIndex::new(idx)),
        body_limit: DEFAULT_BODY_LIMIT,
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildGazetteer { osm, out, rules } => {
            build_gazetteer(&osm, &out, rules.as_deref())?;
        }
        Command::BuildFreq { corpus, gazetteer, out } => build_freq(&corpus, &gazetteer, &out)?,
        Command::Train {
            task,
            data,
            out,
            seed,
            variant,
        } => train(task, &data, &out, seed, variant)?,
        Command::Annotate {
            gazetteer,
            models,
            input,
            out,
        } => {
            annotate(&gazetteer, &models, &input, &out)?;
        }
        Command::Index { input, out } => {
            index(&input, &out)?;
        }
        Command::Serve {
            gazetteer,
            index,
            models,
            port,
            host,
            static_dir,
        } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(
                &gazetteer,
                &index,
                &models,
                SocketAddr::new(host, port),
                static_dir,
            ))?;
        }
    }
    Ok(())
}
